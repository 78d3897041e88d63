#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace exhier {

using Label = std::uint32_t;
using Block = std::vector<Label>;

class InvalidHierarchy : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A laminar family on {1..n} containing [n], all singletons and (implicitly) the
// empty set. Stored as its canonical tree: vertex j-1 is the leaf of label j,
// internal vertices follow sorted by (size desc, min label asc), so vertex n is
// the root whenever n > 1.
class FiniteHierarchy {
 public:
  using Node = std::uint32_t;
  static constexpr Node kNone = ~Node{0};

  FiniteHierarchy() { build_trivial(1); }

  static FiniteHierarchy trivial(std::size_t n) {
    FiniteHierarchy h;
    h.build_trivial(n);
    return h;
  }

  static FiniteHierarchy from_blocks(std::size_t n, const std::vector<Block>& blocks);

  // Arbitrary rooted tree (parent -1 marks the root). Vertices with
  // leaf_label[v] != 0 carry that label and must be leaves. Vertices with no
  // labels below are dropped and unary vertices are contracted.
  static FiniteHierarchy from_rooted_tree(std::size_t n, const std::vector<std::int64_t>& parent,
                                          const std::vector<Label>& leaf_label);

  std::size_t n() const { return n_; }
  std::size_t node_count() const { return parent_.size(); }
  std::size_t internal_count() const { return node_count() - n_; }
  Node root() const { return n_ == 1 ? 0 : static_cast<Node>(n_); }
  Node leaf(Label j) const { return j - 1; }
  bool is_leaf(Node v) const { return v < n_; }
  Node parent_of(Node v) const { return parent_[v]; }
  const std::vector<Node>& children(Node v) const { return children_[v]; }
  std::size_t size_of(Node v) const { return size_[v]; }
  Label min_of(Node v) const { return min_[v]; }
  std::size_t depth(Node v) const { return depth_[v]; }
  const std::vector<Node>& parents() const { return parent_; }

  bool contains(Node v, Label j) const {
    std::uint32_t p = pos_[j - 1];
    return p >= first_[v] && p < first_[v] + size_[v];
  }

  Block block(Node v) const {
    Block b(order_.begin() + first_[v], order_.begin() + first_[v] + size_[v]);
    std::sort(b.begin(), b.end());
    return b;
  }

  // Every nonempty block, internal vertices first (canonical order), then singletons.
  std::vector<Block> blocks() const {
    std::vector<Block> out;
    out.reserve(node_count());
    for (Node v = static_cast<Node>(n_); v < node_count(); ++v) out.push_back(block(v));
    for (Node v = 0; v < n_; ++v) out.push_back(block(v));
    return out;
  }

  // Blocks other than [n] and the singletons.
  std::vector<Block> nontrivial_blocks() const {
    std::vector<Block> out;
    for (Node v = static_cast<Node>(n_) + 1; v < node_count(); ++v) out.push_back(block(v));
    return out;
  }

  Node mrca_node(Label i, Label j) const {
    Node v = leaf(i);
    while (!contains(v, j)) v = parent_[v];
    return v;
  }

  Node node_of(const Block& b) const {
    if (b.empty()) return kNone;
    Node v = leaf(b.front());
    while (size_[v] < b.size()) v = parent_[v];
    if (size_[v] != b.size()) return kNone;
    for (Label x : b)
      if (x < 1 || x > n_ || !contains(v, x)) return kNone;
    return v;
  }

  bool has_block(const Block& b) const { return b.empty() || node_of(b) != kNone; }

  bool operator==(const FiniteHierarchy& o) const { return n_ == o.n_ && parent_ == o.parent_; }
  bool operator!=(const FiniteHierarchy& o) const { return !(*this == o); }
  bool operator<(const FiniteHierarchy& o) const {
    return n_ != o.n_ ? n_ < o.n_ : parent_ < o.parent_;
  }

 private:
  void build_trivial(std::size_t n) {
    if (n == 0) throw InvalidHierarchy("ground set must be nonempty");
    std::vector<Node> parent(n == 1 ? 1 : n + 1, kNone);
    if (n > 1)
      for (std::size_t j = 0; j < n; ++j) parent[j] = static_cast<Node>(n);
    finalize(n, std::move(parent));
  }

  // parent must already be in canonical vertex order.
  void finalize(std::size_t n, std::vector<Node> parent);

  std::size_t n_ = 0;
  std::vector<Node> parent_;
  std::vector<std::vector<Node>> children_;
  std::vector<std::uint32_t> size_, first_, depth_, pos_;
  std::vector<Label> min_, order_;
};

inline void FiniteHierarchy::finalize(std::size_t n, std::vector<Node> parent) {
  n_ = n;
  parent_ = std::move(parent);
  const std::size_t V = parent_.size();
  children_.assign(V, {});
  size_.assign(V, 0);
  min_.assign(V, 0);
  for (Node v = 0; v < n; ++v) {
    size_[v] = 1;
    min_[v] = v + 1;
  }
  for (std::size_t v = V; v-- > 0;) {
    if (v < n && V > 1 && parent_[v] == kNone) throw InvalidHierarchy("leaf without parent");
    Node p = parent_[v];
    if (p == kNone) continue;
    if (p < n || (v >= n && p >= v)) throw InvalidHierarchy("vertex order is not canonical");
    children_[p].push_back(static_cast<Node>(v));
  }
  for (std::size_t v = V; v-- > n;) {
    std::uint32_t s = 0;
    Label m = ~Label{0};
    for (Node c : children_[v]) {
      s += size_[c];
      m = std::min(m, min_[c]);
    }
    size_[v] = s;
    min_[v] = m;
  }
  for (auto& ch : children_)
    std::sort(ch.begin(), ch.end(), [&](Node a, Node b) { return min_[a] < min_[b]; });

  first_.assign(V, 0);
  depth_.assign(V, 0);
  pos_.assign(n, 0);
  order_.clear();
  order_.reserve(n);
  std::vector<Node> stack{root()};
  while (!stack.empty()) {
    Node v = stack.back();
    stack.pop_back();
    first_[v] = static_cast<std::uint32_t>(order_.size());
    if (v < n) {
      pos_[v] = static_cast<std::uint32_t>(order_.size());
      order_.push_back(v + 1);
      continue;
    }
    for (auto it = children_[v].rbegin(); it != children_[v].rend(); ++it) {
      depth_[*it] = depth_[v] + 1;
      stack.push_back(*it);
    }
  }
  if (order_.size() != n) throw InvalidHierarchy("tree does not reach every label");
}

inline FiniteHierarchy FiniteHierarchy::from_blocks(std::size_t n, const std::vector<Block>& blocks) {
  if (n == 0) throw InvalidHierarchy("ground set must be nonempty");
  std::vector<Block> bs;
  bs.reserve(blocks.size());
  for (const Block& raw : blocks) {
    Block b = raw;
    std::sort(b.begin(), b.end());
    if (std::adjacent_find(b.begin(), b.end()) != b.end())
      throw InvalidHierarchy("block with repeated label");
    for (Label x : b)
      if (x < 1 || x > n) throw InvalidHierarchy("label " + std::to_string(x) + " out of range");
    if (b.size() >= 2 && b.size() < n) bs.push_back(std::move(b));
  }
  std::sort(bs.begin(), bs.end(), [](const Block& a, const Block& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  bs.erase(std::unique(bs.begin(), bs.end()), bs.end());
  // Distinct blocks of a laminar family have distinct (min, size), and the
  // canonical order sorts by (size desc, min asc); lexicographic order agrees on min.
  const std::size_t V = n == 1 ? 1 : n + 1 + bs.size();
  std::vector<Node> parent(V, kNone);
  if (n > 1) {
    std::vector<Node> deepest(n, static_cast<Node>(n));
    for (std::size_t k = 0; k < bs.size(); ++k) {
      const Block& b = bs[k];
      Node p = deepest[b.front() - 1];
      for (Label x : b) {
        if (deepest[x - 1] != p) {
          std::ostringstream msg;
          msg << "blocks are not laminar: {";
          for (std::size_t t = 0; t < b.size(); ++t) msg << (t ? "," : "") << b[t];
          msg << "} overlaps another block";
          throw InvalidHierarchy(msg.str());
        }
      }
      Node v = static_cast<Node>(n + 1 + k);
      parent[v] = p;
      for (Label x : b) deepest[x - 1] = v;
    }
    for (std::size_t j = 0; j < n; ++j) parent[j] = deepest[j];
  }
  FiniteHierarchy h;
  h.finalize(n, std::move(parent));
  return h;
}

inline FiniteHierarchy FiniteHierarchy::from_rooted_tree(std::size_t n, const std::vector<std::int64_t>& parent,
                                                         const std::vector<Label>& leaf_label) {
  const std::size_t V = parent.size();
  if (leaf_label.size() != V) throw InvalidHierarchy("label array size mismatch");
  if (n == 0) throw InvalidHierarchy("ground set must be nonempty");
  std::vector<std::uint32_t> head(V + 1, 0);
  std::size_t root = V;
  for (std::size_t v = 0; v < V; ++v) {
    if (parent[v] < 0) {
      if (root != V) throw InvalidHierarchy("more than one root");
      root = v;
    } else {
      if (static_cast<std::size_t>(parent[v]) >= V) throw InvalidHierarchy("parent out of range");
      ++head[parent[v] + 1];
    }
  }
  if (root == V) throw InvalidHierarchy("no root");
  for (std::size_t v = 0; v < V; ++v) head[v + 1] += head[v];
  std::vector<std::uint32_t> kids(V ? V - 1 : 0), fill(head.begin(), head.end() - 1);
  for (std::size_t v = 0; v < V; ++v)
    if (parent[v] >= 0) kids[fill[parent[v]]++] = static_cast<std::uint32_t>(v);

  std::vector<std::uint32_t> bfs{static_cast<std::uint32_t>(root)};
  bfs.reserve(V);
  for (std::size_t q = 0; q < bfs.size(); ++q)
    for (std::uint32_t k = head[bfs[q]]; k < head[bfs[q] + 1]; ++k) bfs.push_back(kids[k]);
  if (bfs.size() != V) throw InvalidHierarchy("parent links contain a cycle");

  std::vector<char> seen(n, 0);
  for (std::size_t v = 0; v < V; ++v) {
    Label l = leaf_label[v];
    if (l == 0) continue;
    if (l > n) throw InvalidHierarchy("leaf label out of range");
    if (seen[l - 1]) throw InvalidHierarchy("duplicate leaf label");
    if (head[v + 1] != head[v]) throw InvalidHierarchy("labelled vertex has children");
    seen[l - 1] = 1;
  }
  for (std::size_t j = 0; j < n; ++j)
    if (!seen[j]) throw InvalidHierarchy("label " + std::to_string(j + 1) + " missing");

  // rep[v]: the surviving vertex standing for v (-1 if no labels below).
  std::vector<std::int64_t> rep(V, -1);
  std::vector<std::uint32_t> cnt(V, 0);
  std::vector<Label> mn(V, 0);
  std::vector<std::vector<std::int64_t>> kept_kids(V);
  for (std::size_t q = V; q-- > 0;) {
    std::uint32_t v = bfs[q];
    if (leaf_label[v]) {
      rep[v] = v;
      cnt[v] = 1;
      mn[v] = leaf_label[v];
      continue;
    }
    std::vector<std::int64_t> reps;
    Label m = ~Label{0};
    for (std::uint32_t k = head[v]; k < head[v + 1]; ++k) {
      std::uint32_t c = kids[k];
      if (!cnt[c]) continue;
      cnt[v] += cnt[c];
      m = std::min(m, mn[c]);
      reps.push_back(rep[c]);
    }
    mn[v] = m;
    if (reps.size() == 1) rep[v] = reps.front();
    else if (reps.size() >= 2) {
      rep[v] = v;
      kept_kids[v] = std::move(reps);
    }
  }
  std::vector<std::uint32_t> internal;
  for (std::size_t v = 0; v < V; ++v)
    if (rep[v] == static_cast<std::int64_t>(v) && !leaf_label[v]) internal.push_back(static_cast<std::uint32_t>(v));
  std::sort(internal.begin(), internal.end(), [&](std::uint32_t a, std::uint32_t b) {
    return cnt[a] != cnt[b] ? cnt[a] > cnt[b] : mn[a] < mn[b];
  });
  std::vector<Node> index(V, kNone);
  for (std::size_t v = 0; v < V; ++v)
    if (leaf_label[v]) index[v] = leaf_label[v] - 1;
  for (std::size_t r = 0; r < internal.size(); ++r) index[internal[r]] = static_cast<Node>(n + r);
  std::vector<Node> par(n == 1 ? 1 : n + internal.size(), kNone);
  for (std::uint32_t v : internal)
    for (std::int64_t c : kept_kids[v]) par[index[c]] = index[v];
  FiniteHierarchy h;
  h.finalize(n, std::move(par));
  return h;
}

// ---- free functions -------------------------------------------------------

inline void check_label(const FiniteHierarchy& h, Label j) {
  if (j < 1 || j > h.n()) throw std::out_of_range("label " + std::to_string(j) + " out of range");
}

inline FiniteHierarchy restrict(const FiniteHierarchy& h, const std::vector<Label>& subset) {
  Block s = subset;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  if (s.empty()) throw std::invalid_argument("restriction to the empty set");
  for (Label x : s) check_label(h, x);
  std::vector<Label> relabel(h.n(), 0);
  for (std::size_t r = 0; r < s.size(); ++r) relabel[s[r] - 1] = static_cast<Label>(r + 1);
  std::vector<std::int64_t> parent(h.node_count());
  std::vector<Label> labels(h.node_count(), 0);
  for (std::size_t v = 0; v < h.node_count(); ++v) {
    auto p = h.parent_of(static_cast<FiniteHierarchy::Node>(v));
    parent[v] = p == FiniteHierarchy::kNone ? -1 : static_cast<std::int64_t>(p);
    if (v < h.n()) labels[v] = relabel[v];
  }
  return FiniteHierarchy::from_rooted_tree(s.size(), parent, labels);
}

inline FiniteHierarchy restrict_prefix(const FiniteHierarchy& h, std::size_t m) {
  Block s(m);
  std::iota(s.begin(), s.end(), Label{1});
  return restrict(h, s);
}

inline Block mrca(const FiniteHierarchy& h, Label i, Label j) {
  check_label(h, i);
  check_label(h, j);
  return h.block(h.mrca_node(i, j));
}

inline FiniteHierarchy mrca_closure(const FiniteHierarchy& h) {
  std::vector<Block> bs;
  for (Label i = 1; i <= h.n(); ++i)
    for (Label j = i + 1; j <= h.n(); ++j) bs.push_back(h.block(h.mrca_node(i, j)));
  return FiniteHierarchy::from_blocks(h.n(), bs);
}

// A(i,j,k) = 1 iff k is in the MRCA of i and j.
inline bool binary_array(const FiniteHierarchy& h, Label i, Label j, Label k) {
  check_label(h, i);
  check_label(h, j);
  check_label(h, k);
  return h.contains(h.mrca_node(i, j), k);
}

// Smallest non-singleton block containing j; [1] when n = 1.
inline Block parent(const FiniteHierarchy& h, Label j) {
  check_label(h, j);
  if (h.n() == 1) return {1};
  return h.block(h.parent_of(h.leaf(j)));
}

// ---- text format ----------------------------------------------------------

inline std::string format_block(const Block& b) {
  std::string s = "{";
  for (std::size_t t = 0; t < b.size(); ++t) {
    if (t) s += ',';
    s += std::to_string(b[t]);
  }
  return s + "}";
}

inline std::string to_text(const FiniteHierarchy& h) {
  std::string s = "n=" + std::to_string(h.n()) + "\n";
  for (const Block& b : h.nontrivial_blocks()) s += format_block(b) + "\n";
  return s;
}

inline Block parse_block(std::string_view line) {
  auto open = line.find('{');
  auto close = line.find('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    throw InvalidHierarchy("malformed block line '" + std::string(line) + "'");
  Block b;
  std::string cur;
  for (char c : line.substr(open + 1, close - open - 1)) {
    if (c == ',') {
      if (cur.empty()) throw InvalidHierarchy("empty label in block");
      b.push_back(static_cast<Label>(std::stoul(cur)));
      cur.clear();
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      cur += c;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      throw InvalidHierarchy("unexpected character in block");
    }
  }
  if (!cur.empty()) b.push_back(static_cast<Label>(std::stoul(cur)));
  return b;
}

inline FiniteHierarchy parse_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  std::vector<Block> blocks;
  while (std::getline(in, line)) {
    auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line[a] == '#') continue;
    std::string_view l(line);
    l.remove_prefix(a);
    if (n == 0) {
      if (l.substr(0, 2) != "n=") throw InvalidHierarchy("missing 'n=<int>' header");
      try {
        n = std::stoul(std::string(l.substr(2)));
      } catch (const std::exception&) {
        throw InvalidHierarchy("bad header '" + std::string(l) + "'");
      }
      if (n == 0) throw InvalidHierarchy("n must be positive");
      continue;
    }
    blocks.push_back(parse_block(l));
  }
  if (n == 0) throw InvalidHierarchy("missing 'n=<int>' header");
  return FiniteHierarchy::from_blocks(n, blocks);
}

inline std::ostream& operator<<(std::ostream& os, const FiniteHierarchy& h) {
  os << "n=" << h.n();
  for (const Block& b : h.nontrivial_blocks()) os << ' ' << format_block(b);
  return os;
}

// ---- leaf-labelled trees (the graph bijection) ---------------------------

class InvalidTree : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LeafLabeledTree {
  std::vector<std::int64_t> parent;  // -1 at the root
  std::vector<Label> label;          // 0 on internal vertices
};

inline void validate_tree(const LeafLabeledTree& t) {
  const std::size_t V = t.parent.size();
  if (V == 0 || t.label.size() != V) throw InvalidTree("empty tree or size mismatch");
  std::vector<std::size_t> deg(V, 0);
  std::size_t roots = 0, root = 0;
  for (std::size_t v = 0; v < V; ++v) {
    if (t.parent[v] < 0) {
      ++roots;
      root = v;
    } else if (static_cast<std::size_t>(t.parent[v]) >= V) {
      throw InvalidTree("parent out of range");
    } else {
      ++deg[t.parent[v]];
    }
  }
  if (roots != 1) throw InvalidTree("tree must have exactly one root");
  std::size_t leaves = 0;
  std::vector<char> seen(V + 1, 0);
  for (std::size_t v = 0; v < V; ++v) {
    if (deg[v] == 0) {
      ++leaves;
      Label l = t.label[v];
      if (l == 0 || l > V) throw InvalidTree("leaf without a valid label");
      if (seen[l]) throw InvalidTree("duplicate leaf label");
      seen[l] = 1;
    } else {
      if (t.label[v] != 0) throw InvalidTree("internal vertex carries a label");
      if (deg[v] == 1 && v != root) throw InvalidTree("non-root vertex of degree two");
    }
  }
  if (V > 1 && deg[root] == 0) throw InvalidTree("root is a leaf");
  if (deg[root] == 1 && V > 1) throw InvalidTree("root has a single child");
  for (Label l = 1; l <= leaves; ++l)
    if (!seen[l]) throw InvalidTree("leaf labels are not 1..n");
  // Reachability: walk up from each vertex with a step bound.
  for (std::size_t v = 0; v < V; ++v) {
    std::size_t u = v, steps = 0;
    while (t.parent[u] >= 0 && steps++ <= V) u = static_cast<std::size_t>(t.parent[u]);
    if (u != root) throw InvalidTree("parent links contain a cycle");
  }
}

inline LeafLabeledTree to_tree(const FiniteHierarchy& h) {
  LeafLabeledTree t;
  t.parent.resize(h.node_count());
  t.label.assign(h.node_count(), 0);
  for (FiniteHierarchy::Node v = 0; v < h.node_count(); ++v) {
    auto p = h.parent_of(v);
    t.parent[v] = p == FiniteHierarchy::kNone ? -1 : static_cast<std::int64_t>(p);
    if (h.is_leaf(v)) t.label[v] = v + 1;
  }
  return t;
}

// Inverse of the graph map: each vertex contributes the labels of the leaves below it.
inline FiniteHierarchy from_tree(const LeafLabeledTree& t) {
  validate_tree(t);
  const std::size_t V = t.parent.size();
  std::size_t n = 0;
  for (Label l : t.label) n += l != 0;
  std::vector<Block> sets(V);
  for (std::size_t v = 0; v < V; ++v) {
    if (!t.label[v]) continue;
    std::int64_t u = static_cast<std::int64_t>(v);
    while (u >= 0) {
      sets[u].push_back(t.label[v]);
      u = t.parent[u];
    }
  }
  return FiniteHierarchy::from_blocks(n, sets);
}

inline std::string to_dot(const FiniteHierarchy& h, std::string_view name = "hierarchy") {
  std::ostringstream os;
  os << "digraph " << name << " {\n";
  for (FiniteHierarchy::Node v = 0; v < h.node_count(); ++v) {
    if (h.is_leaf(v))
      os << "  v" << v << " [label=\"" << v + 1 << "\"];\n";
    else
      os << "  v" << v << " [label=\"\", shape=point];\n";
  }
  for (FiniteHierarchy::Node v = 0; v < h.node_count(); ++v)
    for (auto c : h.children(v)) os << "  v" << v << " -> v" << c << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace exhier
