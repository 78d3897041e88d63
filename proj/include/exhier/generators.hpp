#pragma once

#include "exhier/hierarchy.hpp"
#include "exhier/interval.hpp"
#include "exhier/oracle.hpp"
#include "exhier/rational.hpp"
#include "exhier/realtree.hpp"
#include "exhier/rng.hpp"
#include "exhier/spinal.hpp"
#include "exhier/weight_tree.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include "json.hpp"

namespace exhier {

// H_n = {{j : U_j >= x}} ∪ Ξ([n]) with persistent uniforms U_j.
class CombOracle : public ExactSpinalOracle {
 public:
  explicit CombOracle(std::uint64_t seed) : u_(seed) {}
  std::string name() const override { return "comb"; }
  double uniform(Label j) const { return u_.value(j); }

  FiniteHierarchy prefix(std::size_t n) const override {
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = u_.value(j + 1);
    return ErosionCombFamily().induced(u);
  }
  bool in_mrca(Label i, Label j, Label k) const override {
    if (i == j) return k == i;
    return u_.value(k) >= std::min(u_.value(i), u_.value(j));
  }
  bool same_top_block(Label, Label, std::size_t) const override { return true; }
  Rational spinal_exact(Label i, Label j) const override {
    if (i == j) return 1;
    return std::min(u_.exact(i), u_.exact(j));
  }
  double spinal_double(Label i, Label j) const override {
    return i == j ? 1.0 : std::min(u_.value(i), u_.value(j));
  }

 private:
  LabelUniform u_;
};

// Uniform sampling from the nested intervals of a weight tree.
class WeightTreeOracle : public ExactSpinalOracle {
 public:
  WeightTreeOracle(std::shared_ptr<const WeightTree> tree, std::uint64_t seed, std::string name = "weight-tree")
      : tree_(std::move(tree)), u_(seed), name_(std::move(name)), cache_(std::make_shared<Cache>()) {}
  std::string name() const override { return name_; }
  const WeightTree& tree() const { return *tree_; }
  double uniform(Label j) const { return u_.value(j); }
  // Terminals of the first kCached labels are memoized; spinal loops revisit them.
  std::size_t terminal(Label j) const {
    if (j >= kCached) return tree_->locate(u_.value(j));
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto& t = cache_->term;
    if (t.size() <= j) t.resize(std::min<std::size_t>(kCached, std::max<std::size_t>(2 * j, 64)), kUnset);
    if (t[j] == kUnset) t[j] = tree_->locate(u_.value(j));
    return t[j];
  }

  FiniteHierarchy prefix(std::size_t n) const override {
    std::vector<std::size_t> term(n);
    for (std::size_t j = 0; j < n; ++j) term[j] = terminal(static_cast<Label>(j + 1));
    return induced_hierarchy(*tree_, term);
  }
  bool in_mrca(Label i, Label j, Label k) const override {
    if (i == j) return k == i;
    return tree_->is_ancestor(tree_->lca(terminal(i), terminal(j)), terminal(k));
  }
  bool same_top_block(Label i, Label j, std::size_t) const override {
    if (i == j) return true;
    return tree_->node(tree_->lca(terminal(i), terminal(j))).weight < 1;
  }
  Rational spinal_exact(Label i, Label j) const override {
    if (i == j) return 1;
    return 1 - tree_->node(tree_->lca(terminal(i), terminal(j))).weight;
  }
  double spinal_double(Label i, Label j) const override {
    if (i == j) return 1.0;
    return 1.0 - tree_->node(tree_->lca(terminal(i), terminal(j))).weight_d;
  }

 private:
  static constexpr std::size_t kCached = std::size_t(1) << 16;
  static constexpr std::size_t kUnset = SIZE_MAX;
  struct Cache {
    std::mutex mu;
    std::vector<std::size_t> term;
  };
  std::shared_ptr<const WeightTree> tree_;
  LabelUniform u_;
  std::string name_;
  std::shared_ptr<Cache> cache_;
};

// Law of X^i_J for a fresh label J when i sits at `terminal`: atom 1 − w(a) with
// mass w(a) − w(next node towards terminal) for each ancestor a, and w(terminal) at 1 − w(terminal).
inline PiecewiseDistribution<Rational> spinal_law(const WeightTree& t, std::size_t terminal) {
  std::vector<std::size_t> path;
  for (std::int64_t v = static_cast<std::int64_t>(terminal); v >= 0; v = t.node(static_cast<std::size_t>(v)).parent)
    path.push_back(static_cast<std::size_t>(v));
  std::reverse(path.begin(), path.end());
  PiecewiseDistribution<Rational> d;
  for (std::size_t q = 0; q < path.size(); ++q) {
    const Rational w = t.node(path[q]).weight;
    const Rational m = q + 1 < path.size() ? w - t.node(path[q + 1]).weight : w;
    if (m > 0) d.atoms.push_back({1 - w, m});
  }
  return d;
}

inline std::shared_ptr<const WeightTree> shared_dyadic(unsigned depth) {
  return std::make_shared<const WeightTree>(WeightTree::dyadic(depth));
}

// Triple family on [0,3] with V_j = 3·U_j.
class TripleOracle : public ExactSpinalOracle {
 public:
  explicit TripleOracle(std::uint64_t seed) : u_(seed) {}
  std::string name() const override { return "triple"; }

  double value(Label j) const { return 3.0 * u_.value(j); }
  Rational exact(Label j) const { return 3 * u_.exact(j); }
  // Integer N_j = V_j · 2^kBits (odd); region from N against 2^kBits multiples.
  std::uint64_t scaled(Label j) const { return 3 * u_.numerator(j); }
  int region(Label j) const { return static_cast<int>(scaled(j) >> LabelUniform::kBits); }

  FiniteHierarchy prefix(std::size_t n) const override {
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = value(static_cast<Label>(j + 1));
    return TripleFamily().induced(v);
  }

  // Largest d such that both lie in one open depth-d dyadic subinterval of (0,1).
  unsigned common_depth(Label i, Label j) const {
    const unsigned B = LabelUniform::kBits;
    const std::uint64_t a = scaled(i), b = scaled(j);
    unsigned d = 0;
    while (d + 1 < B && (a >> (B - d - 1)) == (b >> (B - d - 1))) ++d;
    return d;
  }

  bool in_mrca(Label i, Label j, Label k) const override {
    if (i == j) return k == i;
    const int ri = region(i), rj = region(j), rk = region(k);
    if (ri != rj) return true;
    if (rk != ri) return false;
    if (ri == 1) return true;
    if (ri == 2) return scaled(k) <= std::max(scaled(i), scaled(j));
    // Values are odd multiples of 2^-kBits, so they never sit on a boundary of depth < kBits.
    const unsigned B = LabelUniform::kBits;
    const unsigned d = common_depth(i, j);
    return (scaled(k) >> (B - d)) == (scaled(i) >> (B - d));
  }
  bool same_top_block(Label i, Label j, std::size_t) const override { return region(i) == region(j); }

  Rational spinal_exact(Label i, Label j) const override {
    if (i == j) return 1;
    const int ri = region(i), rj = region(j);
    if (ri != rj) return 0;
    if (ri == 1) return Rational(2, 3);
    if (ri == 2) return 1 - (std::max(exact(i), exact(j)) - 2) / 3;
    return 1 - pow2_inv(common_depth(i, j)) / 3;
  }

 private:
  LabelUniform u_;
};

// iid samples from a line-breaking CRT truncated at kmax segments.
class CrtOracle : public HierarchyOracle {
 public:
  CrtOracle(std::uint64_t seed, std::size_t kmax) : seed_(seed) {
    Stream rng(seed, "crt-tree");
    tree_ = crt_linebreak(rng, kmax).tree;
  }
  std::string name() const override { return "crt"; }
  const WeightedTree<double>& tree() const { return tree_; }
  SparsePoint<double> sample(Label j) const {
    Stream rng(seed_, "crt-sample", j);
    return sample_point(tree_, rng);
  }
  FiniteHierarchy prefix(std::size_t n) const override {
    std::vector<SparsePoint<double>> s;
    for (std::size_t j = 1; j <= n; ++j) s.push_back(sample(static_cast<Label>(j)));
    return derived_hierarchy(tree_.tree, s, n);
  }

 private:
  std::uint64_t seed_;
  WeightedTree<double> tree_;
};

// Random rational weight tree: children weights with small denominators,
// nonincreasing, sometimes leaving a deficit.
inline WeightTree random_weight_tree(Stream& rng, unsigned depth, unsigned max_children = 3) {
  WeightTree t;
  std::vector<std::size_t> level{0};
  for (unsigned d = 1; d <= depth; ++d) {
    std::vector<std::size_t> next;
    for (auto id : level) {
      const unsigned r = 2 + static_cast<unsigned>(rng.index(max_children - 1));
      const long long den = 2 + static_cast<long long>(rng.index(5));
      // Parts of den·r (+ optional deficit) as positive integers, sorted decreasing.
      std::vector<long long> parts(r, 1);
      long long total = den * r;
      bool deficit = rng.index(3) == 0;
      long long spare = total - static_cast<long long>(r) - (deficit ? 1 : 0);
      for (long long s = 0; s < spare; ++s) ++parts[rng.index(r)];
      std::sort(parts.rbegin(), parts.rend());
      Composition base = t.node(id).path;
      for (unsigned c = 0; c < r; ++c) {
        Composition p = base;
        p.push_back(c + 1);
        next.push_back(t.add(p, t.node(id).weight * Rational(parts[c], total)));
      }
    }
    level = std::move(next);
  }
  return t;
}

struct GeneratorSpec {
  std::string kind = "dyadic";  // comb | dyadic | triple | crt | weight-tree | trivial | ehpf-table
  unsigned depth = 12;
  std::size_t kmax = 32;
  std::string weights;    // weight-tree file
  std::string table = "remy";  // ehpf-table kind
  std::uint64_t seed = 0;
};

inline GeneratorSpec spec_from_json(const nlohmann::json& j, GeneratorSpec base = {}) {
  base.kind = j.value("kind", base.kind);
  base.depth = j.value("depth", base.depth);
  base.kmax = j.value("kmax", base.kmax);
  base.weights = j.value("weights", base.weights);
  base.table = j.value("table", base.table);
  base.seed = j.value("seed", base.seed);
  return base;
}

inline GeneratorSpec spec_from_file(const std::string& path, GeneratorSpec base = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open generator config " + path);
  return spec_from_json(nlohmann::json::parse(in), base);
}

inline WeightTree load_weight_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weight file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_weight_tree(ss.str());
}

}  // namespace exhier
