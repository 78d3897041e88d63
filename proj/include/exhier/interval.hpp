#pragma once

#include "exhier/hierarchy.hpp"
#include "exhier/rng.hpp"
#include "exhier/weight_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace exhier {

// A hierarchy on a bounded interval [0, L] given by a membership rule; the
// induced hierarchy on [n] collects {j : u_j ∈ B} over members B.
class IntervalFamily {
 public:
  virtual ~IntervalFamily() = default;
  virtual std::string name() const = 0;
  virtual double ground_length() const = 0;
  virtual FiniteHierarchy induced(const std::vector<double>& u) const = 0;
};

inline FiniteHierarchy sample_hierarchy(const IntervalFamily& f, std::size_t n, Stream& rng) {
  std::vector<double> u(n);
  for (auto& x : u) x = rng.uniform() * f.ground_length();
  return f.induced(u);
}

inline FiniteHierarchy sample_hierarchy(const WeightTree& t, std::size_t n, Stream& rng) {
  std::vector<double> u(n);
  for (auto& x : u) x = rng.uniform();
  return sample_hierarchy(t, u);
}

namespace detail {

// Tree builder over labels 1..n, appending internal vertices after the leaves.
struct TreeBuilder {
  std::vector<std::int64_t> parent;
  std::vector<Label> label;
  explicit TreeBuilder(std::size_t n) : parent(n, -1), label(n) {
    for (std::size_t j = 0; j < n; ++j) label[j] = static_cast<Label>(j + 1);
  }
  std::int64_t node(std::int64_t par) {
    parent.push_back(par);
    label.push_back(0);
    return static_cast<std::int64_t>(parent.size() - 1);
  }
  FiniteHierarchy build(std::size_t n) const { return FiniteHierarchy::from_rooted_tree(n, parent, label); }
};

// Open dyadic intervals of (a, a + 2^-d) below `at`; labels are sorted by value.
inline void dyadic_split(TreeBuilder& tb, std::int64_t at, const std::vector<std::pair<double, std::size_t>>& pts,
                         std::size_t lo, std::size_t hi, double a, double width, unsigned depth) {
  if (hi - lo <= 1 || depth >= 60) {
    for (std::size_t q = lo; q < hi; ++q) tb.parent[pts[q].second] = at;
    return;
  }
  const double mid = a + width / 2;
  std::size_t m1 = lo, m2;
  while (m1 < hi && pts[m1].first < mid) ++m1;
  m2 = m1;
  while (m2 < hi && pts[m2].first == mid) ++m2;
  for (std::size_t q = m1; q < m2; ++q) tb.parent[pts[q].second] = at;
  if (m1 > lo) dyadic_split(tb, tb.node(at), pts, lo, m1, a, width / 2, depth + 1);
  if (hi > m2) dyadic_split(tb, tb.node(at), pts, m2, hi, mid, width / 2, depth + 1);
}

// Chain of lower sets {u < x}: labels enter in increasing value, ties together.
inline void lower_comb(TreeBuilder& tb, std::int64_t at, std::vector<std::pair<double, std::size_t>> pts) {
  std::sort(pts.begin(), pts.end());
  std::int64_t cur = at;
  // Walk from the top value down: each step peels the largest group off the current block.
  std::size_t hi = pts.size();
  while (hi > 0) {
    std::size_t lo = hi;
    while (lo > 0 && pts[lo - 1].first == pts[hi - 1].first) --lo;
    for (std::size_t q = lo; q < hi; ++q) tb.parent[pts[q].second] = cur;
    if (lo > 0) cur = tb.node(cur);
    hi = lo;
  }
}

}  // namespace detail

// Members on [0,3]: (0,1), (1,2), (2,3), dyadic subintervals of (0,1), and (2,x) for 2 < x < 3.
class TripleFamily : public IntervalFamily {
 public:
  std::string name() const override { return "triple"; }
  double ground_length() const override { return 3.0; }

  enum class Region { kDyadic, kBroom, kComb, kBoundary };
  static Region region(double u) {
    if (u > 0 && u < 1) return Region::kDyadic;
    if (u > 1 && u < 2) return Region::kBroom;
    if (u > 2 && u < 3) return Region::kComb;
    return Region::kBoundary;
  }

  FiniteHierarchy induced(const std::vector<double>& u) const override {
    const std::size_t n = u.size();
    if (n == 0) throw std::invalid_argument("empty sample");
    detail::TreeBuilder tb(n);
    auto root = tb.node(-1);
    std::vector<std::pair<double, std::size_t>> a, b, c;
    for (std::size_t j = 0; j < n; ++j) {
      switch (region(u[j])) {
        case Region::kDyadic: a.emplace_back(u[j], j); break;
        case Region::kBroom: b.emplace_back(u[j], j); break;
        case Region::kComb: c.emplace_back(u[j], j); break;
        case Region::kBoundary: tb.parent[j] = root; break;
      }
    }
    if (!a.empty()) {
      std::sort(a.begin(), a.end());
      detail::dyadic_split(tb, tb.node(root), a, 0, a.size(), 0.0, 1.0, 0);
    }
    if (!b.empty()) {
      auto v = tb.node(root);
      for (auto& [x, j] : b) tb.parent[j] = v;
    }
    if (!c.empty()) detail::lower_comb(tb, tb.node(root), c);
    return tb.build(n);
  }
};

// Example (a): upper level sets {u >= x}, 0 <= x <= 1.
class ErosionCombFamily : public IntervalFamily {
 public:
  std::string name() const override { return "comb"; }
  double ground_length() const override { return 1.0; }
  FiniteHierarchy induced(const std::vector<double>& u) const override {
    const std::size_t n = u.size();
    detail::TreeBuilder tb(n);
    auto root = tb.node(-1);
    std::vector<std::pair<double, std::size_t>> p;
    for (std::size_t j = 0; j < n; ++j) p.emplace_back(-u[j], j);
    detail::lower_comb(tb, root, p);
    return tb.build(n);
  }
};

// Example (b): upper level sets {u >= x} only for x outside an open set
// formed by ε-neighbourhoods of an enumeration of the rationals in [0,1].
class NonWellOrderedFamily : public IntervalFamily {
 public:
  explicit NonWellOrderedFamily(std::size_t terms = 256) {
    // Rationals p/q in [0,1] by increasing q, ε_k = 2^-(k+2) so Σ ε_k < 1/4.
    std::vector<std::pair<double, double>> iv;
    std::size_t k = 1;
    for (std::uint64_t q = 1; k <= terms; ++q)
      for (std::uint64_t p = 0; p <= q && k <= terms; ++p) {
        if (std::gcd(p, q) != 1) continue;
        double c = static_cast<double>(p) / static_cast<double>(q);
        double e = std::ldexp(1.0, -static_cast<int>(k + 2));
        iv.emplace_back(c - e, c + e);
        ++k;
      }
    std::sort(iv.begin(), iv.end());
    for (const auto& x : iv) {
      if (!cover_.empty() && x.first < cover_.back().second) cover_.back().second = std::max(cover_.back().second, x.second);
      else cover_.push_back(x);
    }
  }
  std::string name() const override { return "nonwellordered"; }
  double ground_length() const override { return 1.0; }

  bool in_open_set(double x) const {
    for (const auto& [a, b] : cover_)
      if (a < x && x < b) return true;
    return false;
  }
  // Some x ∈ [0,1] \ U with lo < x <= hi; a connected range is covered only by a single component.
  bool complement_meets(double lo, double hi) const {
    hi = std::min(hi, 1.0);
    const bool closed = lo < 0.0;
    lo = std::max(lo, 0.0);
    if (closed ? hi < lo : hi <= lo) return false;
    for (const auto& [a, b] : cover_)
      if ((closed ? a < lo : a <= lo) && b > hi) return false;
    return true;
  }
  const std::vector<std::pair<double, double>>& cover() const { return cover_; }

  FiniteHierarchy induced(const std::vector<double>& u) const override {
    const std::size_t n = u.size();
    std::vector<std::size_t> ord(n);
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
    std::vector<Block> blocks;
    Block top;
    for (std::size_t k = 0; k < n; ++k) {
      top.push_back(static_cast<Label>(ord[k] + 1));
      if (k + 1 < n && u[ord[k + 1]] == u[ord[k]]) continue;
      double below = k + 1 < n ? u[ord[k + 1]] : -1.0;
      // {u >= x} equals the current top set for x in (below, u_k].
      if (complement_meets(below, u[ord[k]])) {
        Block b = top;
        std::sort(b.begin(), b.end());
        blocks.push_back(std::move(b));
      }
    }
    return FiniteHierarchy::from_blocks(n, blocks);
  }

 private:
  std::vector<std::pair<double, double>> cover_;
};

}  // namespace exhier
