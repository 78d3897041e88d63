#pragma once

#include "exhier/ehpf.hpp"
#include "exhier/generators.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace exhier {

class UnknownGenerator : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// h(s) = 1/N(s) on caterpillars, 0 elsewhere.
inline EhpfFamily caterpillar_family() {
  return [](const HierarchyShape& s) -> Rational {
    auto h = representative(s);
    for (auto v = h.n(); v < h.node_count(); ++v) {
      const auto& ch = h.children(static_cast<FiniteHierarchy::Node>(v));
      std::size_t leaves = 0;
      for (auto c : ch) leaves += h.is_leaf(c);
      if (ch.size() != 2 || leaves == 0) return 0;
    }
    return Rational(1) / Rational(labelled_count(s));
  };
}

// h(s) = prob_exact of a representative, memoized per shape.
inline EhpfFamily weight_tree_family(std::shared_ptr<const WeightTree> t) {
  struct Cache {
    std::mutex mu;
    std::map<std::string, Rational> values;
  };
  auto cache = std::make_shared<Cache>();
  return [t = std::move(t), cache](const HierarchyShape& s) -> Rational {
    {
      std::lock_guard<std::mutex> lock(cache->mu);
      auto it = cache->values.find(s.key);
      if (it != cache->values.end()) return it->second;
    }
    Rational p = s.leaves == 1 ? Rational(1) : prob_exact(*t, representative(s)).p;
    std::lock_guard<std::mutex> lock(cache->mu);
    cache->values.emplace(s.key, p);
    return p;
  };
}

inline EhpfFamily ehpf_family(const GeneratorSpec& spec) {
  if (spec.table == "remy") return remy_family();
  if (spec.table == "caterpillar") return caterpillar_family();
  if (spec.table == "dyadic") return weight_tree_family(shared_dyadic(spec.depth));
  if (spec.table == "weight-tree") {
    if (spec.weights.empty()) throw std::invalid_argument("ehpf-table weight-tree needs a weights file");
    return weight_tree_family(std::make_shared<const WeightTree>(load_weight_tree(spec.weights)));
  }
  throw UnknownGenerator("unknown ehpf table '" + spec.table + "'");
}

// Weight trees are read once and shared between replicas.
struct OracleFactory {
  GeneratorSpec spec;
  std::shared_ptr<const WeightTree> tree;
  EhpfFamily family;

  explicit OracleFactory(GeneratorSpec s) : spec(std::move(s)) {
    if (spec.kind == "dyadic") tree = shared_dyadic(spec.depth);
    else if (spec.kind == "weight-tree") {
      if (spec.weights.empty()) throw std::invalid_argument("weight-tree generator needs a weights file");
      tree = std::make_shared<const WeightTree>(load_weight_tree(spec.weights));
    } else if (spec.kind == "ehpf-table") {
      family = ehpf_family(spec);
    } else if (spec.kind != "comb" && spec.kind != "triple" && spec.kind != "crt" && spec.kind != "trivial") {
      throw UnknownGenerator("unknown generator '" + spec.kind + "'");
    }
  }

  std::unique_ptr<HierarchyOracle> make(std::uint64_t seed) const {
    if (spec.kind == "comb") return std::make_unique<CombOracle>(seed);
    if (spec.kind == "dyadic") return std::make_unique<WeightTreeOracle>(tree, seed, "dyadic");
    if (spec.kind == "weight-tree") return std::make_unique<WeightTreeOracle>(tree, seed);
    if (spec.kind == "triple") return std::make_unique<TripleOracle>(seed);
    if (spec.kind == "crt") return std::make_unique<CrtOracle>(seed, spec.kmax);
    if (spec.kind == "trivial") return std::make_unique<TrivialOracle>();
    return std::make_unique<EhpfOracle>(family, seed);
  }
  std::unique_ptr<HierarchyOracle> make() const { return make(spec.seed); }
};

inline std::unique_ptr<HierarchyOracle> make_oracle(const GeneratorSpec& spec) { return OracleFactory(spec).make(); }

}  // namespace exhier
