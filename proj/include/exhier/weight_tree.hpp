#pragma once

#include "exhier/hierarchy.hpp"
#include "exhier/rational.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

namespace exhier {

using Composition = std::vector<std::uint32_t>;

inline std::string format_composition(const Composition& c) {
  std::string s;
  for (std::size_t k = 0; k < c.size(); ++k) s += (k ? "," : "") + std::to_string(c[k]);
  return s;
}

class InvalidWeightTree : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Nested intervals of [0,1]: node λ has width w_λ, children (λ,1), (λ,2), ...
// laid out left to right from the left end of λ; an uncovered right part
// of λ (deficit) is retained mass that never splits. When `truncated` is set,
// bottom-level nodes stand for further unresolved splitting.
class WeightTree {
 public:
  struct Node {
    Composition path;
    Rational weight;
    Rational lo;  // left endpoint
    double weight_d = 1, lo_d = 0;
    std::int64_t parent = -1;
    std::vector<std::size_t> children;
  };

  WeightTree() {
    nodes_.push_back({{}, Rational(1), Rational(0), 1.0, 0.0, -1, {}});
    hot_.push_back({0.0, 1.0, -1, 0});
    kids_.emplace_back();
  }

  static WeightTree dyadic(unsigned depth) {
    WeightTree t;
    t.nodes_.reserve((std::size_t(2) << depth) - 1);
    std::vector<std::size_t> level{0};
    for (unsigned d = 1; d <= depth; ++d) {
      std::vector<std::size_t> next;
      for (auto id : level) {
        const Rational w = pow2_inv(d);
        const double wd = std::ldexp(1.0, -static_cast<int>(d));
        const Node& par = t.nodes_[id];
        Rational lo = par.lo;
        const double lod = par.lo_d;
        next.push_back(t.append(id, w, wd, lo, lod));
        next.push_back(t.append(id, w, wd, lo + w, lod + wd));
      }
      level = std::move(next);
    }
    t.truncated_ = true;
    return t;
  }

  // Root split into the given child weights, no deeper structure.
  static WeightTree flat(const std::vector<Rational>& w) {
    WeightTree t;
    for (std::uint32_t c = 0; c < w.size(); ++c) t.add({c + 1}, w[c]);
    return t;
  }

  std::size_t add(const Composition& path, const Rational& w) {
    if (path.empty()) throw InvalidWeightTree("the root weight is fixed at 1");
    Composition par(path.begin(), path.end() - 1);
    if (!indexed_) {
      for (std::size_t id = 1; id < nodes_.size(); ++id) index_[nodes_[id].path] = id;
      indexed_ = true;
    }
    auto p = find(par);
    if (p < 0) throw InvalidWeightTree("parent of " + format_composition(path) + " not present");
    if (path.back() != nodes_[p].children.size() + 1)
      throw InvalidWeightTree("children must be listed in order: " + format_composition(path));
    return add_child(static_cast<std::size_t>(p), w);
  }

  // Appends the next child of `parent`.
  std::size_t add_child(std::size_t parent, const Rational& w) {
    const auto& kids = nodes_[parent].children;
    Composition path = nodes_[parent].path;
    path.push_back(static_cast<std::uint32_t>(kids.size() + 1));
    if (w <= 0 || w > 1) throw InvalidWeightTree("weight outside (0,1] at " + format_composition(path));
    if (!kids.empty() && nodes_[kids.back()].weight < w) throw InvalidWeightTree("sibling weights must be nonincreasing");
    Rational lo = kids.empty() ? nodes_[parent].lo : nodes_[kids.back()].lo + nodes_[kids.back()].weight;
    if (lo + w > nodes_[parent].lo + nodes_[parent].weight)
      throw InvalidWeightTree("children exceed the parent weight at " + format_composition(path));
    const double wd = w.convert_to<double>(), lod = lo.convert_to<double>();
    return append(parent, w, wd, std::move(lo), lod);
  }

  std::int64_t find(const Composition& path) const {
    if (path.empty()) return 0;
    if (!indexed_) {
      for (std::size_t id = 1; id < nodes_.size(); ++id)
        if (nodes_[id].path == path) return static_cast<std::int64_t>(id);
      return -1;
    }
    auto it = index_.find(path);
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
  }

  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& nd : nodes_) d = std::max(d, nd.path.size());
    return d;
  }
  bool truncated() const { return truncated_; }
  void set_truncated(bool t) { truncated_ = t; }

  Rational gap(std::size_t id) const {
    Rational g = nodes_[id].weight;
    for (auto c : nodes_[id].children) g -= nodes_[c].weight;
    return g;
  }

  // x_λ = w_λ / w_λ'.
  Rational ratio(std::size_t id) const {
    return id == 0 ? Rational(1) : nodes_[id].weight / nodes_[nodes_[id].parent].weight;
  }

  std::map<Composition, Rational> ratios() const {
    std::map<Composition, Rational> r;
    for (std::size_t id = 1; id < nodes_.size(); ++id) r[nodes_[id].path] = ratio(id);
    return r;
  }

  static WeightTree from_ratios(const std::map<Composition, Rational>& x) {
    // Breadth-first so parents precede children and siblings come in order.
    std::vector<std::pair<Composition, Rational>> items(x.begin(), x.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first.size() < b.first.size(); });
    WeightTree t;
    for (const auto& [p, r] : items) {
      Composition par(p.begin(), p.end() - 1);
      auto pid = t.find(par);
      if (pid < 0) throw InvalidWeightTree("ratio without parent");
      t.add(p, r * t.nodes_[pid].weight);
    }
    return t;
  }

  // Deepest node whose left-closed interval contains u: binary search over the
  // leaf-order cells, with an exact walk near cell boundaries.
  std::size_t locate(double u) const {
    if (u < 0 || u > 1) throw std::out_of_range("u outside [0,1]");
    auto& c = *cells_;
    std::call_once(c.once, [this, &c] { build_cells(c); });
    const auto it = std::upper_bound(c.start.begin(), c.start.end(), u);
    const auto q = static_cast<std::size_t>(it - c.start.begin()) - 1;
    const bool near = u - c.start[q] < 1e-9 || (q + 1 < c.start.size() ? c.start[q + 1] : 1.0) - u < 1e-9;
    return near ? locate_walk(u) : c.node[q];
  }

  std::size_t locate(const Rational& u) const {
    std::size_t cur = 0;
    for (;;) {
      std::size_t next = cur;
      for (auto c : nodes_[cur].children)
        if (nodes_[c].lo <= u && u < nodes_[c].lo + nodes_[c].weight) {
          next = c;
          break;
        }
      if (next == cur) return cur;
      cur = next;
    }
  }

  Composition address(double u) const { return nodes_[locate(u)].path; }

  std::size_t lca(std::size_t a, std::size_t b) const {
    while (hot_[a].depth > hot_[b].depth) a = static_cast<std::size_t>(hot_[a].parent);
    while (hot_[b].depth > hot_[a].depth) b = static_cast<std::size_t>(hot_[b].parent);
    while (a != b) {
      a = static_cast<std::size_t>(hot_[a].parent);
      b = static_cast<std::size_t>(hot_[b].parent);
    }
    return a;
  }

  bool is_ancestor(std::size_t a, std::size_t d) const {
    while (hot_[d].depth > hot_[a].depth) d = static_cast<std::size_t>(hot_[d].parent);
    return a == d;
  }

 private:
  struct Cells {
    std::once_flag once;
    std::vector<double> start;
    std::vector<std::size_t> node;
  };

  void build_cells(Cells& c) const {
    auto visit = [&](auto&& self, std::size_t id) -> void {
      const auto& kids = nodes_[id].children;
      if (kids.empty()) {
        c.start.push_back(hot_[id].lo);
        c.node.push_back(id);
        return;
      }
      Rational used = 0;
      for (auto k : kids) {
        self(self, k);
        used += nodes_[k].weight;
      }
      if (used < nodes_[id].weight) {
        c.start.push_back(hot_[kids.back()].hi);
        c.node.push_back(id);
      }
    };
    visit(visit, 0);
  }

  std::size_t locate_walk(double u) const {
    std::size_t cur = 0;
    for (;;) {
      std::size_t next = cur;
      for (auto c : kids_[cur]) {
        const double a = hot_[c].lo, b = hot_[c].hi;
        bool in;
        if (std::abs(u - a) < 1e-9 || std::abs(u - b) < 1e-9) {
          const auto& nd = nodes_[c];
          Rational ur(u);
          in = nd.lo <= ur && ur < nd.lo + nd.weight;
        } else {
          in = a <= u && u < b;
        }
        if (in) {
          next = c;
          break;
        }
      }
      if (next == cur) return cur;
      cur = next;
    }
  }

  // Compact mirror of the double intervals and links, walked by locate and lca.
  struct Hot {
    double lo, hi;
    std::int64_t parent;
    std::size_t depth;
  };
  std::vector<Node> nodes_;
  std::vector<Hot> hot_;
  std::vector<std::vector<std::size_t>> kids_;
  std::shared_ptr<Cells> cells_ = std::make_shared<Cells>();  // rebuilt lazily after each append
  std::size_t append(std::size_t parent, const Rational& w, double wd, Rational lo, double lod) {
    Node nd;
    nd.path = nodes_[parent].path;
    nd.path.push_back(static_cast<std::uint32_t>(nodes_[parent].children.size() + 1));
    nd.weight = w;
    nd.lo = std::move(lo);
    nd.weight_d = wd;
    nd.lo_d = lod;
    nd.parent = static_cast<std::int64_t>(parent);
    nodes_.push_back(std::move(nd));
    const std::size_t id = nodes_.size() - 1;
    nodes_[parent].children.push_back(id);
    hot_.push_back({lod, lod + wd, static_cast<std::int64_t>(parent), nodes_[id].path.size()});
    kids_.emplace_back();
    kids_[parent].push_back(id);
    cells_ = std::make_shared<Cells>();
    if (indexed_) index_[nodes_[id].path] = id;
    return id;
  }

  std::map<Composition, std::size_t> index_;
  bool indexed_ = false;
  bool truncated_ = false;
};

// `λ -> w` lines in depth-first order; `truncated` marks an unresolved bottom level.
inline std::string to_text(const WeightTree& t) {
  std::ostringstream os;
  if (t.truncated()) os << "truncated\n";
  auto rec = [&](auto&& self, std::size_t id) -> void {
    if (id != 0) os << format_composition(t.node(id).path) << " -> " << to_string(t.node(id).weight) << "\n";
    for (auto c : t.node(id).children) self(self, c);
  };
  rec(rec, 0);
  return os.str();
}

inline WeightTree parse_weight_tree(std::string_view text) {
  WeightTree t;
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::pair<Composition, Rational>> items;
  bool trunc = false;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    auto b = line.find_last_not_of(" \t\r");
    std::string body = line.substr(a, b - a + 1);
    if (body == "truncated") {
      trunc = true;
      continue;
    }
    auto arrow = body.find("->");
    if (arrow == std::string::npos) throw InvalidWeightTree("expected `lambda -> weight`: " + body);
    std::string lhs = body.substr(0, arrow), rhs = body.substr(arrow + 2);
    Composition c;
    std::uint64_t cur = 0;
    bool have = false;
    for (char ch : lhs) {
      if (std::isdigit(static_cast<unsigned char>(ch))) {
        cur = cur * 10 + static_cast<unsigned>(ch - '0');
        have = true;
      } else if (ch == ',' || ch == '.' || ch == ' ' || ch == '(' || ch == ')' || ch == '\t') {
        if (have) c.push_back(static_cast<std::uint32_t>(cur));
        cur = 0;
        have = false;
      } else {
        throw InvalidWeightTree("bad composition: " + lhs);
      }
    }
    if (have) c.push_back(static_cast<std::uint32_t>(cur));
    if (c.empty()) throw InvalidWeightTree("empty composition");
    for (auto x : c)
      if (x == 0) throw InvalidWeightTree("composition parts must be positive");
    auto r = rhs.find_first_not_of(" \t");
    items.emplace_back(c, parse_rational(rhs.substr(r == std::string::npos ? 0 : r)));
  }
  std::stable_sort(items.begin(), items.end(), [](const auto& x, const auto& y) { return x.first.size() < y.first.size(); });
  for (const auto& [c, w] : items) t.add(c, w);
  t.set_truncated(trunc);
  return t;
}

// Hierarchy induced by labels sitting at the given weight-tree nodes.
inline FiniteHierarchy induced_hierarchy(const WeightTree& t, const std::vector<std::size_t>& terminal) {
  const std::size_t n = terminal.size();
  std::vector<std::int64_t> parent(n, -1);
  std::vector<Label> label(n);
  std::map<std::size_t, std::int64_t> local;
  auto vertex = [&](auto&& self, std::size_t id) -> std::int64_t {
    auto it = local.find(id);
    if (it != local.end()) return it->second;
    std::int64_t v = static_cast<std::int64_t>(parent.size());
    parent.push_back(-1);
    label.push_back(0);
    local[id] = v;
    if (id != 0) parent[v] = self(self, static_cast<std::size_t>(t.node(id).parent));
    return v;
  };
  for (std::size_t j = 0; j < n; ++j) {
    label[j] = static_cast<Label>(j + 1);
    parent[j] = vertex(vertex, terminal[j]);
  }
  return FiniteHierarchy::from_rooted_tree(n, parent, label);
}

template <class U>
FiniteHierarchy sample_hierarchy(const WeightTree& t, const std::vector<U>& u) {
  std::vector<std::size_t> term;
  term.reserve(u.size());
  for (const auto& x : u) term.push_back(t.locate(x));
  return induced_hierarchy(t, term);
}

struct ProbResult {
  Rational p;
  Rational truncation_bound;  // P(some pair unresolved at the bottom level)
};

class InsufficientDepth : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 1 − P(no two of n uniforms share a bottom-level node); zero when not truncated.
inline Rational truncation_bound(const WeightTree& t, std::size_t n) {
  if (!t.truncated()) return 0;
  const std::size_t D = t.depth();
  std::vector<Rational> e(n + 1, Rational(0));  // elementary symmetric of bottom weights
  e[0] = 1;
  Rational total = 0;
  for (std::size_t id = 0; id < t.size(); ++id) {
    if (t.node(id).path.size() != D) continue;
    const Rational& w = t.node(id).weight;
    total += w;
    for (std::size_t k = n; k >= 1; --k) e[k] += e[k - 1] * w;
  }
  Rational ok = 0;
  Rational fall = 1;  // k!·C(n,k) = n!/(n−k)!
  for (std::size_t k = 0; k <= n; ++k) {
    Rational rest = 1;
    for (std::size_t q = k; q < n; ++q) rest *= (1 - total);
    ok += fall * e[k] * rest;
    fall *= Rational(static_cast<long long>(n - k));
  }
  return 1 - ok;
}

// P(sample_hierarchy(t, n iid uniforms) = h) by recursion over the weight tree.
inline ProbResult prob_exact(const WeightTree& t, const FiniteHierarchy& h, const Rational& tolerance = Rational(-1)) {
  ProbResult res;
  res.truncation_bound = truncation_bound(t, h.n());
  if (tolerance >= 0 && res.truncation_bound > tolerance)
    throw InsufficientDepth("weight-tree depth too small: truncation bound " + to_string(res.truncation_bound));
  if (h.n() == 1) {
    res.p = 1;
    return res;
  }
  std::map<std::pair<std::size_t, FiniteHierarchy::Node>, Rational> memo;
  auto f = [&](auto&& self, std::size_t lam, FiniteHierarchy::Node v) -> Rational {
    if (h.is_leaf(v)) return 1;
    auto key = std::make_pair(lam, v);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const auto& kids = t.node(lam).children;
    const std::size_t r = kids.size();
    if (r > 20) throw std::length_error("too many children for the assignment recursion");
    const Rational wl = t.node(lam).weight;
    std::vector<Rational> x(r);
    for (std::size_t c = 0; c < r; ++c) x[c] = t.node(kids[c]).weight / wl;
    const Rational g = t.gap(lam) / wl;
    const auto sz = h.size_of(v);
    Rational total = 0;
    for (std::size_t c = 0; c < r; ++c) {
      Rational xp = 1;
      for (std::size_t q = 0; q < sz; ++q) xp *= x[c];
      if (xp != 0) total += xp * self(self, kids[c], v);
    }
    // Distinct children of v go to distinct child intervals; singletons may also stay in the gap.
    std::map<std::uint32_t, Rational> dp{{0u, Rational(1)}};
    for (auto ch : h.children(v)) {
      std::map<std::uint32_t, Rational> nx;
      const auto csz = h.size_of(ch);
      for (const auto& [mask, val] : dp) {
        if (h.is_leaf(ch) && g != 0) nx[mask] += val * g;
        for (std::size_t c = 0; c < r; ++c) {
          if (mask >> c & 1u) continue;
          Rational xp = 1;
          for (std::size_t q = 0; q < csz; ++q) xp *= x[c];
          Rational sub = h.is_leaf(ch) ? Rational(1) : self(self, kids[c], ch);
          if (sub != 0) nx[mask | (1u << c)] += val * xp * sub;
        }
      }
      dp = std::move(nx);
    }
    for (const auto& [mask, val] : dp) total += val;
    memo.emplace(key, total);
    return total;
  };
  res.p = f(f, 0, h.root());
  return res;
}

}  // namespace exhier
