#pragma once

#include "exhier/hierarchy.hpp"
#include "exhier/rational.hpp"

#include <algorithm>
#include <memory>
#include <string>

namespace exhier {

class OracleInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A consistent sequence (H_n): prefix(n) is a hierarchy on [n] and
// prefix(n+1) restricted to [n] equals prefix(n).
class HierarchyOracle {
 public:
  virtual ~HierarchyOracle() = default;
  virtual std::string name() const = 0;
  virtual FiniteHierarchy prefix(std::size_t n) const = 0;

  // k ∈ (i ∧ j), evaluated in any prefix containing the three labels.
  virtual bool in_mrca(Label i, Label j, Label k) const {
    if (i == j) return k == i;
    auto h = prefix(std::max({i, j, k}));
    return h.contains(h.mrca_node(i, j), k);
  }

  // Limit top-level partition: i ~ j iff (i ∧ j) is not the whole label set.
  // Generic fallback: some label of [horizon] lies outside (i ∧ j).
  virtual bool same_top_block(Label i, Label j, std::size_t horizon) const {
    if (i == j) return true;
    auto h = prefix(std::max<std::size_t>({horizon, i, j}));
    return h.size_of(h.mrca_node(i, j)) < h.n();
  }
};

// Oracles whose spinal values X^i_j (measure outside the MRCA) are known in closed form.
class ExactSpinalOracle : public HierarchyOracle {
 public:
  virtual Rational spinal_exact(Label i, Label j) const = 0;
  virtual double spinal_double(Label i, Label j) const { return spinal_exact(i, j).convert_to<double>(); }
};

template <class S>
S spinal_value(const ExactSpinalOracle& o, Label i, Label j);

template <>
inline double spinal_value<double>(const ExactSpinalOracle& o, Label i, Label j) {
  return o.spinal_double(i, j);
}

template <>
inline Rational spinal_value<Rational>(const ExactSpinalOracle& o, Label i, Label j) {
  return o.spinal_exact(i, j);
}

// H_n = Ξ([n]) for every n.
class TrivialOracle : public ExactSpinalOracle {
 public:
  std::string name() const override { return "trivial"; }
  FiniteHierarchy prefix(std::size_t n) const override { return FiniteHierarchy::trivial(n); }
  bool in_mrca(Label i, Label j, Label k) const override { return i == j ? k == i : true; }
  bool same_top_block(Label i, Label j, std::size_t) const override { return i == j; }
  Rational spinal_exact(Label i, Label j) const override { return i == j ? 1 : 0; }
  double spinal_double(Label i, Label j) const override { return i == j ? 1.0 : 0.0; }
};

// Wraps a fixed finite hierarchy as an oracle on its own prefixes.
class FiniteOracle : public HierarchyOracle {
 public:
  explicit FiniteOracle(FiniteHierarchy h) : h_(std::move(h)) {}
  std::string name() const override { return "finite"; }
  FiniteHierarchy prefix(std::size_t n) const override {
    if (n > h_.n()) throw std::out_of_range("prefix beyond the stored hierarchy");
    return n == h_.n() ? h_ : restrict_prefix(h_, n);
  }
  bool in_mrca(Label i, Label j, Label k) const override {
    if (i == j) return k == i;
    return h_.contains(h_.mrca_node(i, j), k);
  }
  const FiniteHierarchy& hierarchy() const { return h_; }

 private:
  FiniteHierarchy h_;
};

// Restriction check: prefix(n+1) restricted to [n] equals prefix(n).
inline bool check_consistency(const HierarchyOracle& o, std::size_t n) {
  return restrict_prefix(o.prefix(n + 1), n) == o.prefix(n);
}

}  // namespace exhier
