#pragma once

#include "exhier/hierarchy.hpp"
#include "exhier/oracle.hpp"
#include "exhier/rational.hpp"
#include "exhier/rng.hpp"
#include "exhier/shape.hpp"
#include "exhier/stats.hpp"
#include "exhier/weight_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace exhier {

// h(s) = P(H_n = H) for any H of shape s.
struct EhpfTable {
  std::size_t n = 0;
  std::map<std::string, double> h;
  std::map<std::string, double> se;  // standard errors (zero for exact tables)
  std::map<std::string, Rational> exact;
  Rational truncation_bound = 0;
  std::uint64_t replicas = 0;
  bool is_exact = false;

  double value(const std::string& key) const {
    auto it = h.find(key);
    return it == h.end() ? 0.0 : it->second;
  }
  Rational exact_value(const std::string& key) const {
    auto it = exact.find(key);
    return it == exact.end() ? Rational(0) : it->second;
  }
  // Σ_s N(s) h(s).
  double total() const {
    double t = 0;
    for (const auto& [k, v] : h) t += v * labelled_count({k, n}).convert_to<double>();
    return t;
  }
};

inline EhpfTable ehpf_from_counts(const CountTable& counts, std::size_t n) {
  EhpfTable t;
  t.n = n;
  for (const auto& [k, c] : counts) t.replicas += c;
  const double R = static_cast<double>(t.replicas);
  for (const auto& [k, c] : counts) {
    const double N = labelled_count({k, n}).convert_to<double>();
    const double p = static_cast<double>(c) / R;
    t.h[k] = p / N;
    t.se[k] = binomial_se(p, t.replicas) / N;
  }
  return t;
}

// Shapes of H_n over independent replicas; make(r) yields the r-th replica's hierarchy.
inline CountTable shape_counts(const std::function<FiniteHierarchy(std::uint64_t)>& make, std::uint64_t replicas) {
  CountTable c;
  for (std::uint64_t r = 0; r < replicas; ++r) ++c[shape(make(r)).key];
  return c;
}

inline EhpfTable ehpf_from_samples(const std::function<FiniteHierarchy(std::uint64_t)>& make, std::size_t n,
                                   std::uint64_t replicas) {
  return ehpf_from_counts(shape_counts(make, replicas), n);
}

inline EhpfTable ehpf_exact(const WeightTree& t, std::size_t n) {
  EhpfTable tab;
  tab.n = n;
  tab.is_exact = true;
  tab.truncation_bound = truncation_bound(t, n);
  for (const auto& s : enumerate_shapes(n)) {
    Rational p = prob_exact(t, representative(s)).p;
    tab.exact[s.key] = p;
    tab.h[s.key] = p.convert_to<double>();
    tab.se[s.key] = 0;
  }
  return tab;
}

// Rémy's uniform binary growth: every labelled binary tree has h = 1/(2n−3)!!.
inline EhpfTable ehpf_remy(std::size_t n) {
  EhpfTable tab;
  tab.n = n;
  tab.is_exact = true;
  BigInt dfact = 1;
  for (std::size_t k = 3; k + 2 <= 2 * n; k += 2) dfact *= k;
  for (const auto& s : enumerate_shapes(n)) {
    auto h = representative(s);
    bool binary = true;
    for (auto v = h.n(); v < h.node_count(); ++v)
      if (h.children(static_cast<FiniteHierarchy::Node>(v)).size() != 2) binary = false;
    Rational p = binary || n == 1 ? Rational(BigInt(1), dfact) : Rational(0);
    tab.exact[s.key] = p;
    tab.h[s.key] = p.convert_to<double>();
    tab.se[s.key] = 0;
  }
  return tab;
}

// All mass on caterpillars, each labelled caterpillar equally likely.
inline EhpfTable ehpf_caterpillar(std::size_t n) {
  EhpfTable tab;
  tab.n = n;
  tab.is_exact = true;
  for (const auto& s : enumerate_shapes(n)) {
    // A caterpillar's internal vertices form a chain, each with at most... exactly one internal child.
    auto h = representative(s);
    bool cat = true;
    for (auto v = h.n(); v < h.node_count(); ++v) {
      const auto& ch = h.children(static_cast<FiniteHierarchy::Node>(v));
      std::size_t leaves = 0;
      for (auto c : ch) leaves += h.is_leaf(c);
      if (ch.size() != 2 || leaves == 0) cat = false;
    }
    Rational p = cat || n <= 2 ? Rational(1) / Rational(labelled_count(s)) : Rational(0);
    tab.exact[s.key] = p;
    tab.h[s.key] = p.convert_to<double>();
  }
  return tab;
}

struct AdditionRow {
  std::string shape;
  double lhs = 0, rhs = 0, residual = 0, se = 0;
  Rational exact_residual = 0;
  bool ok = true;
};

struct AdditionReport {
  std::vector<AdditionRow> rows;
  bool ok = true;
  double max_sigmas = 0;
  std::string text() const {
    std::ostringstream os;
    for (const auto& r : rows)
      os << r.shape << "  h=" << r.lhs << "  sum=" << r.rhs << "  residual=" << r.residual << "  se=" << r.se
         << (r.ok ? "" : "  VIOLATION") << "\n";
    return os.str();
  }
};

class OrphanShape : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// h(s_n) = Σ over labelled extensions H' of one H of shape s_n of h(s(H')).
inline AdditionReport check_addition_rule(const EhpfTable& a, const EhpfTable& b, double sigmas = 4.0) {
  if (b.n != a.n + 1) throw std::invalid_argument("tables must be at consecutive n");
  AdditionReport rep;
  std::set<std::string> reachable;
  for (const auto& s : enumerate_shapes(a.n)) {
    AdditionRow row;
    row.shape = s.key;
    row.lhs = a.value(s.key);
    double var = std::pow(a.se.count(s.key) ? a.se.at(s.key) : 0.0, 2);
    std::map<std::string, int> mult;
    for (const auto& e : extensions(representative(s))) ++mult[shape(e).key];
    Rational er = a.exact_value(s.key);
    for (const auto& [k, m] : mult) {
      reachable.insert(k);
      row.rhs += m * b.value(k);
      double sk = b.se.count(k) ? b.se.at(k) : 0.0;
      var += m * m * sk * sk;
      er -= m * b.exact_value(k);
    }
    row.residual = row.lhs - row.rhs;
    row.se = std::sqrt(var);
    if (a.is_exact && b.is_exact) {
      row.exact_residual = er;
      row.ok = abs(er) <= a.truncation_bound + b.truncation_bound;
    } else {
      row.ok = std::abs(row.residual) <= sigmas * row.se + 1e-15;
      if (row.se > 0) rep.max_sigmas = std::max(rep.max_sigmas, std::abs(row.residual) / row.se);
    }
    if (!row.ok) rep.ok = false;
    rep.rows.push_back(row);
  }
  for (const auto& [k, v] : b.h)
    if (v > 0 && !reachable.count(k)) throw OrphanShape("shape " + k + " has no predecessor");
  return rep;
}

class AdditionViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using EhpfFamily = std::function<Rational(const HierarchyShape&)>;

// Grow H_1 ⊂ ... ⊂ H_n choosing H' with probability h(H')/h(H); choices[m] drives step m.
inline FiniteHierarchy grow_from_ehpf(const EhpfFamily& h, std::size_t n, const std::function<double(std::size_t)>& uniform) {
  FiniteHierarchy cur = FiniteHierarchy::trivial(1);
  for (std::size_t m = 1; m < n; ++m) {
    auto ext = extensions(cur);
    const Rational base = h(shape(cur));
    std::vector<Rational> w;
    Rational tot = 0;
    for (const auto& e : ext) {
      w.push_back(h(shape(e)));
      tot += w.back();
    }
    if (tot != base) throw AdditionViolation("table violates the addition rule at n=" + std::to_string(m));
    double u = uniform(m) * base.convert_to<double>();
    std::size_t pick = ext.size() - 1;
    for (std::size_t q = 0; q < ext.size(); ++q) {
      u -= w[q].convert_to<double>();
      if (u < 0 && w[q] > 0) {
        pick = q;
        break;
      }
    }
    while (w[pick] == 0 && pick > 0) --pick;
    cur = ext[pick];
  }
  return cur;
}

inline FiniteHierarchy sample_from_ehpf(const EhpfFamily& h, std::size_t n, Stream& rng) {
  return grow_from_ehpf(h, n, [&rng](std::size_t) { return rng.uniform(); });
}

inline EhpfFamily family_from_tables(std::map<std::size_t, EhpfTable> tables) {
  return [tables = std::move(tables)](const HierarchyShape& s) -> Rational {
    if (s.leaves == 1) return 1;
    auto it = tables.find(s.leaves);
    if (it == tables.end()) throw std::out_of_range("no table for n=" + std::to_string(s.leaves));
    if (!it->second.is_exact) throw std::invalid_argument("sequential sampling needs exact tables");
    return it->second.exact_value(s.key);
  };
}

inline EhpfFamily remy_family() {
  return [](const HierarchyShape& s) -> Rational {
    if (s.leaves <= 2) return 1;
    auto h = representative(s);
    for (auto v = h.n(); v < h.node_count(); ++v)
      if (h.children(static_cast<FiniteHierarchy::Node>(v)).size() != 2) return 0;
    BigInt d = 1;
    for (std::size_t k = 3; k + 2 <= 2 * s.leaves; k += 2) d *= k;
    return Rational(BigInt(1), d);
  };
}

// Consistent sequence grown from an EHPF family with per-step persistent uniforms.
class EhpfOracle : public HierarchyOracle {
 public:
  EhpfOracle(EhpfFamily h, std::uint64_t seed, std::string name = "ehpf-table")
      : h_(std::move(h)), seed_(seed), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  FiniteHierarchy prefix(std::size_t n) const override {
    return grow_from_ehpf(h_, n, [this](std::size_t m) { return Stream(seed_, "ehpf-step", m).uniform(); });
  }

 private:
  EhpfFamily h_;
  std::uint64_t seed_;
  std::string name_;
};

// ---- EPPF of the limit top-level partition --------------------------------

using SizeKey = std::string;  // block sizes, decreasing, comma separated

inline SizeKey size_key(std::vector<std::size_t> sizes) {
  std::sort(sizes.rbegin(), sizes.rend());
  std::string s;
  for (std::size_t q = 0; q < sizes.size(); ++q) s += (q ? "," : "") + std::to_string(sizes[q]);
  return s;
}

inline std::vector<std::size_t> parse_size_key(const SizeKey& k) {
  std::vector<std::size_t> out;
  std::size_t cur = 0;
  for (char c : k) {
    if (c == ',') {
      out.push_back(cur);
      cur = 0;
    } else {
      cur = cur * 10 + static_cast<std::size_t>(c - '0');
    }
  }
  out.push_back(cur);
  return out;
}

// Integer partitions of n as size keys.
inline std::vector<SizeKey> integer_partitions(std::size_t n) {
  std::vector<SizeKey> out;
  std::vector<std::size_t> cur;
  auto rec = [&](auto&& self, std::size_t left, std::size_t maxp) -> void {
    if (left == 0) {
      out.push_back(size_key(cur));
      return;
    }
    for (std::size_t p = std::min(left, maxp); p >= 1; --p) {
      cur.push_back(p);
      self(self, left - p, p);
      cur.pop_back();
    }
  };
  rec(rec, n, n);
  return out;
}

// Number of set partitions of [n] with the given block sizes.
inline BigInt set_partition_count(const std::vector<std::size_t>& sizes) {
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  BigInt c = factorial(n);
  std::map<std::size_t, std::size_t> mult;
  for (auto s : sizes) {
    c /= factorial(s);
    ++mult[s];
  }
  for (auto [s, m] : mult) c /= factorial(m);
  return c;
}

// p(λ) = P(Π_n equals one given partition with block sizes λ).
struct EppfTable {
  std::size_t n = 0;
  std::map<SizeKey, double> p;
  std::map<SizeKey, double> se;
  std::map<SizeKey, Rational> exact;
  bool is_exact = false;
  std::uint64_t replicas = 0;
  double value(const SizeKey& k) const {
    auto it = p.find(k);
    return it == p.end() ? 0.0 : it->second;
  }
  Rational exact_value(const SizeKey& k) const {
    auto it = exact.find(k);
    return it == exact.end() ? Rational(0) : it->second;
  }
};

// Top partition of [n]: i ~ j iff (i ∧ j) is not the whole label set.
inline std::vector<std::size_t> top_block_sizes(const HierarchyOracle& o, std::size_t n, std::size_t horizon) {
  std::vector<int> block(n + 1, -1);
  std::vector<std::size_t> sizes;
  for (Label i = 1; i <= n; ++i) {
    if (block[i] >= 0) continue;
    block[i] = static_cast<int>(sizes.size());
    sizes.push_back(1);
    for (Label j = i + 1; j <= n; ++j)
      if (block[j] < 0 && o.same_top_block(i, j, horizon)) {
        block[j] = block[i];
        ++sizes.back();
      }
  }
  return sizes;
}

inline EppfTable eppf_from_counts(const CountTable& counts, std::size_t n) {
  EppfTable t;
  t.n = n;
  for (const auto& [k, c] : counts) t.replicas += c;
  for (const auto& [k, c] : counts) {
    double N = set_partition_count(parse_size_key(k)).convert_to<double>();
    double q = static_cast<double>(c) / static_cast<double>(t.replicas);
    t.p[k] = q / N;
    t.se[k] = binomial_se(q, t.replicas) / N;
  }
  return t;
}

// Exact EPPF for a weight tree: labels pick root children by weight; gap labels are singletons.
inline EppfTable eppf_exact(const WeightTree& t, std::size_t n) {
  EppfTable tab;
  tab.n = n;
  tab.is_exact = true;
  const auto& kids = t.node(0).children;
  const Rational g = t.gap(0);
  for (const auto& key : integer_partitions(n)) {
    auto sizes = parse_size_key(key);
    // Injective assignment of non-singleton blocks to children; singletons to a child or the gap.
    std::map<std::uint64_t, Rational> dp{{0, Rational(1)}};
    for (auto sz : sizes) {
      std::map<std::uint64_t, Rational> nx;
      for (const auto& [mask, v] : dp) {
        if (sz == 1 && g != 0) nx[mask] += v * g;
        for (std::size_t c = 0; c < kids.size(); ++c) {
          if (mask >> c & 1u) continue;
          Rational w = 1;
          for (std::size_t q = 0; q < sz; ++q) w *= t.node(kids[c]).weight;
          nx[mask | (1ull << c)] += v * w;
        }
      }
      dp = std::move(nx);
    }
    Rational tot = 0;
    for (const auto& [m, v] : dp) tot += v;
    tab.exact[key] = tot;
    tab.p[key] = tot.convert_to<double>();
    tab.se[key] = 0;
  }
  return tab;
}

// p(λ) = Σ_i p(λ + e_i) + p(λ ∪ {1}) over blocks i.
inline AdditionReport eppf_addition_check(const EppfTable& a, const EppfTable& b, double sigmas = 4.0) {
  if (b.n != a.n + 1) throw std::invalid_argument("tables must be at consecutive n");
  AdditionReport rep;
  for (const auto& key : integer_partitions(a.n)) {
    AdditionRow row;
    row.shape = key;
    row.lhs = a.value(key);
    double var = std::pow(a.se.count(key) ? a.se.at(key) : 0.0, 2);
    Rational er = a.exact_value(key);
    auto sizes = parse_size_key(key);
    std::vector<SizeKey> terms;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      auto s = sizes;
      ++s[i];
      terms.push_back(size_key(s));
    }
    auto s1 = sizes;
    s1.push_back(1);
    terms.push_back(size_key(s1));
    for (const auto& k : terms) {
      row.rhs += b.value(k);
      double sk = b.se.count(k) ? b.se.at(k) : 0.0;
      var += sk * sk;
      er -= b.exact_value(k);
    }
    row.residual = row.lhs - row.rhs;
    row.se = std::sqrt(var);
    if (a.is_exact && b.is_exact) {
      row.exact_residual = er;
      row.ok = er == 0;
    } else {
      row.ok = std::abs(row.residual) <= sigmas * row.se + 1e-15;
      if (row.se > 0) rep.max_sigmas = std::max(rep.max_sigmas, std::abs(row.residual) / row.se);
    }
    if (!row.ok) rep.ok = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace exhier
