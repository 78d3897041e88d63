#pragma once

#include "exhier/hierarchy.hpp"
#include "exhier/oracle.hpp"
#include "exhier/stats.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace exhier {

struct CombPartition {
  std::vector<Block> blocks;  // ordered by least label
  std::vector<bool> comb;     // block has size >= 2

  std::string text() const {
    std::ostringstream os;
    for (std::size_t b = 0; b < blocks.size(); ++b)
      os << (comb[b] ? "comb " : "single ") << format_block(blocks[b]) << "\n";
    return os.str();
  }
  const Block* block_of(Label j) const {
    for (const auto& b : blocks)
      if (std::binary_search(b.begin(), b.end(), j)) return &b;
    return nullptr;
  }
};

namespace detail {

// Precomputed α (parent node) data for evaluating i ⪯ j inside one hierarchy.
class PrecedeTable {
 public:
  explicit PrecedeTable(const FiniteHierarchy& h) : h_(h), bad_below_(h.node_count(), 0) {
    std::vector<std::size_t> leaf_kids(h.node_count(), 0);
    for (Label j = 1; j <= h.n(); ++j)
      if (h.n() > 1) ++leaf_kids[h.parent_of(h.leaf(j))];
    bad_.assign(h.n() + 1, false);
    for (Label j = 1; j <= h.n(); ++j) bad_[j] = h.n() > 1 && leaf_kids[h.parent_of(h.leaf(j))] > 1;
    // Non-unique-parent labels per subtree, accumulated bottom-up.
    for (std::size_t v = 0; v < h.n(); ++v) bad_below_[v] = bad_[v + 1];
    for (std::size_t v = h.node_count(); v-- > h.n();)
      for (auto c : h.children(static_cast<FiniteHierarchy::Node>(v))) bad_below_[v] += bad_below_[c];
  }

  // α_n(i) ⊊ (i∧j)_n = α_n(j) and every u ∈ {i} ∪ (i∧j) ∖ α(i) has a parent shared with no other label.
  bool precedes(Label i, Label j) const {
    if (i == j) return true;
    const auto ai = h_.parent_of(h_.leaf(i)), aj = h_.parent_of(h_.leaf(j));
    if (h_.mrca_node(i, j) != aj || ai == aj) return false;
    if (bad_[i]) return false;
    return bad_below_[aj] - bad_below_[ai] == 0;
  }

 private:
  const FiniteHierarchy& h_;
  std::vector<bool> bad_;
  std::vector<std::size_t> bad_below_;
};

inline CombPartition partition_from_relation(std::size_t n, const std::function<bool(Label, Label)>& rel) {
  std::vector<std::size_t> uf(n + 1);
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](std::size_t x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  for (Label i = 1; i <= n; ++i)
    for (Label j = 1; j <= n; ++j)
      if (i != j && rel(i, j)) uf[find(i)] = find(j);
  std::map<std::size_t, Block> groups;
  for (Label i = 1; i <= n; ++i) groups[find(i)].push_back(i);
  CombPartition out;
  for (auto& [r, b] : groups) out.blocks.push_back(b);
  std::sort(out.blocks.begin(), out.blocks.end());
  for (const auto& b : out.blocks) out.comb.push_back(b.size() >= 2);
  return out;
}

}  // namespace detail

inline bool precedes(const FiniteHierarchy& h, Label i, Label j) {
  check_label(h, i);
  check_label(h, j);
  return detail::PrecedeTable(h).precedes(i, j);
}

// i ~ j iff i ⪯ j or j ⪯ i with both bullets evaluated within H.
inline CombPartition comb_partition(const FiniteHierarchy& h) {
  detail::PrecedeTable t(h);
  return detail::partition_from_relation(h.n(), [&](Label i, Label j) { return t.precedes(i, j); });
}

// Labels [n] with the bullets evaluated in H_horizon.
inline CombPartition comb_partition(const HierarchyOracle& o, std::size_t n, std::size_t horizon) {
  const auto hm = o.prefix(std::max(n, horizon));
  detail::PrecedeTable t(hm);
  return detail::partition_from_relation(n, [&](Label i, Label j) { return t.precedes(i, j); });
}

// (1/n)·#{k ≤ n : α_m(j) = α_m(k) for m ∈ {n/4, n/2, n}, m ≥ max(j,k)}.
inline double atom_mass_estimate(const HierarchyOracle& o, Label j, std::size_t n) {
  if (j < 1 || j > n) throw std::out_of_range("label outside the prefix");
  std::vector<std::size_t> schedule;
  for (std::size_t m : {n / 4, n / 2, n})
    if (m >= j && m >= 2 && (schedule.empty() || schedule.back() != m)) schedule.push_back(m);
  if (schedule.empty()) return 1.0;
  std::vector<bool> ok(n + 1, true);
  for (auto m : schedule) {
    const auto h = o.prefix(m);
    const auto pj = h.parent_of(h.leaf(j));
    for (Label k = 1; k <= m; ++k)
      if (h.parent_of(h.leaf(k)) != pj) ok[k] = false;
  }
  std::size_t count = 0;
  for (Label k = 1; k <= n; ++k) count += ok[k];
  return static_cast<double>(count) / static_cast<double>(n);
}

// Fractions of labels below the root children classified as binary-split, star and comb parts.
struct BlockMasses {
  double split = 0, star = 0, comb = 0, other = 0;
};

inline BlockMasses classify_root_blocks(const FiniteHierarchy& h) {
  BlockMasses m;
  if (h.n() < 2) return m;
  const double n = static_cast<double>(h.n());
  for (auto c : h.children(h.root())) {
    const double f = static_cast<double>(h.size_of(c)) / n;
    if (h.is_leaf(c)) {
      m.other += f;
      continue;
    }
    bool star = true, comb = true, binary = true;
    std::vector<FiniteHierarchy::Node> stack{c};
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      std::size_t internal = 0;
      const auto& ch = h.children(v);
      for (auto w : ch)
        if (!h.is_leaf(w)) {
          ++internal;
          stack.push_back(w);
        }
      if (internal > 0) star = false;
      if (internal > 1 || ch.size() != 2) comb = false;
      if (ch.size() != 2) binary = false;
    }
    if (star) m.star += f;
    else if (comb) m.comb += f;
    else if (binary) m.split += f;
    else m.other += f;
  }
  return m;
}

inline TestReport chi_square_shapes(const CountTable& a, const CountTable& b, double significance) {
  auto r = chi_square_two_sample(a, b, significance);
  r.name = "chi_square_shapes";
  return r;
}

}  // namespace exhier
