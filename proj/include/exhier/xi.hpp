#pragma once

#include "exhier/rational.hpp"
#include "exhier/realtree.hpp"
#include "exhier/weight_tree.hpp"

#include <algorithm>
#include <map>
#include <vector>

namespace exhier {

// Stick-breaking embedding of a weight tree and a map ξ: [0,1] → T.
// Each string follows a first-child chain λ, (λ,1), (λ,1,1), ... as one
// segment; node μ on it sits at distance w_attach − w_μ, so ||P(μ)|| = 1 − w_μ.
// Children (μ,c), c >= 2, start later strings attached at P(μ). The mass of
// a node's deficit (or of a bottom node) is an atom at P(μ).
// Layout of a string's interval: chain nodes in increasing norm; within a
// node, its atom first and then its side strings in decreasing direction, so
// the bead crushed at each step sits at the right end of its preimage.
class BeadEmbedding {
 public:
  struct Piece {
    bool atom;
    std::size_t node;    // weight-tree node of the atom
    std::size_t string;  // side string otherwise
    Rational mass;
  };
  struct String {
    std::size_t head;                // first weight-tree node of the chain
    std::int64_t attach_node = -1;   // node at the attach point (-1 for the root string)
    std::vector<std::size_t> chain;
    std::vector<Piece> layout;
    SparsePoint<Rational> attach;
    Rational length;
  };

  explicit BeadEmbedding(const WeightTree& t) : t_(t) {
    pos_.assign(t.size(), {});
    string_of_.assign(t.size(), 0);
    strings_.push_back(make_string(0, -1, {}));
    for (std::size_t s = 0; s < strings_.size(); ++s) {
      for (auto mu : strings_[s].chain) {
        const auto& kids = t_.node(mu).children;
        for (std::size_t c = 1; c < kids.size(); ++c) {
          side_[kids[c]] = strings_.size();
          strings_.push_back(make_string(kids[c], static_cast<std::int64_t>(mu), pos_[mu]));
        }
      }
    }
    for (auto& st : strings_) {
      for (auto mu : st.chain) {
        const Rational g = t_.gap(mu);
        if (g > 0) st.layout.push_back({true, mu, 0, g});
        const auto& kids = t_.node(mu).children;
        for (std::size_t c = kids.size(); c-- > 1;)
          st.layout.push_back({false, 0, side_.at(kids[c]), t_.node(kids[c]).weight});
      }
    }
    for (std::size_t s = 0; s < strings_.size(); ++s)
      if (strings_[s].length > 0) tree_.add_segment(strings_[s].attach, static_cast<std::uint32_t>(s + 1), strings_[s].length);
  }

  const LineBreakTree<Rational>& tree() const { return tree_; }
  const std::vector<String>& strings() const { return strings_; }
  const SparsePoint<Rational>& point(std::size_t node) const { return pos_[node]; }

  WeightedTree<Rational> weighted() const {
    WeightedTree<Rational> wt;
    wt.tree = tree_;
    for (const auto& st : strings_)
      for (const auto& p : st.layout)
        if (p.atom) wt.atoms.push_back({pos_[p.node], p.mass});
    return wt;
  }

  // Atoms in layout order with their preimage intervals [lo, lo + mass).
  struct Cell {
    Rational lo, mass;
    std::size_t node;
  };
  std::vector<Cell> cells() const {
    std::vector<Cell> out;
    Rational off = 0;
    auto rec = [&](auto&& self, std::size_t s) -> void {
      for (const auto& p : strings_[s].layout) {
        if (p.atom) {
          out.push_back({off, p.mass, p.node});
          off += p.mass;
        } else {
          self(self, p.string);
        }
      }
    };
    rec(rec, 0);
    return out;
  }

  SparsePoint<Rational> xi(const Rational& u) const {
    if (u < 0 || u > 1) throw std::out_of_range("u outside [0,1]");
    Rational off = 0;
    std::size_t s = 0;
    for (;;) {
      const auto& lay = strings_[s].layout;
      bool moved = false;
      for (std::size_t q = 0; q < lay.size(); ++q) {
        const bool last = q + 1 == lay.size();
        if (u < off + lay[q].mass || (last && u == 1)) {
          if (lay[q].atom) return pos_[lay[q].node];
          s = lay[q].string;
          moved = true;
          break;
        }
        off += lay[q].mass;
      }
      if (!moved) return pos_[strings_[s].chain.back()];
    }
  }

  // ξ_k = π_k ∘ ξ.
  SparsePoint<Rational> xi_k(const Rational& u, std::uint32_t k) const { return project(xi(u), k); }

 private:
  String make_string(std::size_t head, std::int64_t attach_node, SparsePoint<Rational> attach) {
    String st;
    st.head = head;
    st.attach_node = attach_node;
    st.attach = attach;
    const Rational base = attach_node < 0 ? Rational(1) : t_.node(static_cast<std::size_t>(attach_node)).weight;
    const auto dir = static_cast<std::uint32_t>(strings_.size() + 1);
    std::size_t mu = head;
    for (;;) {
      st.chain.push_back(mu);
      pos_[mu] = attach.extended(dir, base - t_.node(mu).weight);
      string_of_[mu] = strings_.size();
      if (t_.node(mu).children.empty()) break;
      mu = t_.node(mu).children[0];
    }
    st.length = base - t_.node(st.chain.back()).weight;
    return st;
  }

  const WeightTree& t_;
  std::vector<String> strings_;
  std::vector<SparsePoint<Rational>> pos_;
  std::vector<std::size_t> string_of_;
  std::map<std::size_t, std::size_t> side_;
  LineBreakTree<Rational> tree_;
};

struct XiCheck {
  std::size_t candidates = 0;
  std::size_t interval_failures = 0;
  std::size_t measure_failures = 0;
  bool ok() const { return interval_failures == 0 && measure_failures == 0; }
};

// Properties at every candidate point (node positions and segment ends):
// (a) ξ^{-1}(F_x) is an interval, (b) its length equals p(F_x).
inline XiCheck check_xi_properties(const BeadEmbedding& e) {
  XiCheck out;
  const auto cells = e.cells();
  const auto wt = e.weighted();
  std::vector<SparsePoint<Rational>> cand{SparsePoint<Rational>::origin()};
  for (const auto& c : cells) cand.push_back(e.point(c.node));
  for (const auto& s : e.tree().segments()) {
    cand.push_back(s.attach);
    cand.push_back(s.end());
  }
  for (const auto& x : cand) {
    ++out.candidates;
    Rational pm = 0;
    for (const auto& a : wt.atoms)
      if (fringe_contains(x, a.location)) pm += a.mass;
    // Preimage as a union of cells; an interval iff the member cells are contiguous.
    std::int64_t first = -1, last = -1;
    Rational len = 0;
    bool gap = false;
    for (std::size_t q = 0; q < cells.size(); ++q) {
      if (!fringe_contains(x, e.point(cells[q].node))) continue;
      if (first < 0) first = static_cast<std::int64_t>(q);
      else if (last != static_cast<std::int64_t>(q) - 1) gap = true;
      last = static_cast<std::int64_t>(q);
      len += cells[q].mass;
    }
    if (gap) ++out.interval_failures;
    if (len != pm) ++out.measure_failures;
  }
  return out;
}

// Monotone crushing: on the preimage of the bead crushed at step k+1,
// ||ξ_{k+1}|| is nondecreasing along the interval.
inline bool check_xi_monotone(const BeadEmbedding& e) {
  const auto cells = e.cells();
  const auto& segs = e.tree().segments();
  for (const auto& s : segs) {
    const std::uint32_t k = s.direction - 1;
    Rational prev = -1;
    bool inside = false, left = false;
    for (const auto& c : cells) {
      const auto& p = e.point(c.node);
      const bool in = project(p, k) == s.attach;
      if (in && left) return false;  // preimage not contiguous
      if (!in) {
        if (inside) left = true;
        continue;
      }
      inside = true;
      Rational nrm = project(p, k + 1).norm();
      if (nrm < prev) return false;
      prev = nrm;
    }
  }
  return true;
}

}  // namespace exhier
