#include "exhier/analysis.hpp"
#include "exhier/factory.hpp"

#include <gtest/gtest.h>

using namespace exhier;

namespace {

using LabelSet = std::set<Label>;

LabelSet set_of(const Block& b) { return LabelSet(b.begin(), b.end()); }

// Literal evaluation of i ⪯ j from the block list.
struct BruteComb {
  const FiniteHierarchy& h;
  std::vector<LabelSet> blocks;
  explicit BruteComb(const FiniteHierarchy& hh) : h(hh) {
    for (const auto& b : h.blocks()) blocks.push_back(set_of(b));
  }
  LabelSet meet(std::initializer_list<Label> ls) const {
    LabelSet out;
    for (Label x = 1; x <= h.n(); ++x) out.insert(x);
    for (const auto& b : blocks) {
      bool all = true;
      for (auto l : ls) all = all && b.count(l);
      if (!all) continue;
      LabelSet keep;
      for (auto x : out)
        if (b.count(x)) keep.insert(x);
      out = keep;
    }
    return out;
  }
  // Smallest block strictly containing {i}.
  LabelSet alpha(Label i) const {
    LabelSet best;
    bool found = false;
    for (const auto& b : blocks)
      if (b.count(i) && b.size() >= 2 && (!found || b.size() < best.size())) {
        best = b;
        found = true;
      }
    return best;
  }
  bool precedes(Label i, Label j) const {
    if (i == j) return true;
    auto ai = alpha(i), aj = alpha(j), m = meet({i, j});
    if (!(m == aj) || ai == m || !std::includes(m.begin(), m.end(), ai.begin(), ai.end())) return false;
    LabelSet us{i};
    for (auto x : m)
      if (!ai.count(x)) us.insert(x);
    for (auto u : us)
      for (Label v = 1; v <= h.n(); ++v)
        if (v != u && alpha(u) == alpha(v)) return false;
    return true;
  }
};

class FlatOracle : public HierarchyOracle {
 public:
  std::string name() const override { return "flat"; }
  FiniteHierarchy prefix(std::size_t n) const override { return FiniteHierarchy::trivial(n); }
};

}  // namespace

TEST(Precedes, MatchesLiteralDefinition) {
  for (std::size_t n = 1; n <= 5; ++n)
    for (const auto& h : enumerate_hierarchies(n)) {
      BruteComb b(h);
      for (Label i = 1; i <= n; ++i)
        for (Label j = 1; j <= n; ++j) ASSERT_EQ(precedes(h, i, j), b.precedes(i, j)) << to_text(h) << i << j;
    }
  Stream rng(61);
  for (int q = 0; q < 200; ++q) {
    auto h = random_hierarchy(9, rng);
    BruteComb b(h);
    for (Label i = 1; i <= 9; ++i)
      for (Label j = 1; j <= 9; ++j) ASSERT_EQ(precedes(h, i, j), b.precedes(i, j));
  }
  EXPECT_THROW(precedes(FiniteHierarchy::trivial(3), 1, 4), std::out_of_range);
}

TEST(CombPartitionTest, TrivialHierarchyAllSingletons) {
  auto p = comb_partition(FiniteHierarchy::trivial(6));
  EXPECT_EQ(p.blocks.size(), 6u);
  for (bool c : p.comb) EXPECT_FALSE(c);
}

TEST(CombPartitionTest, TripleExampleAndBroom) {
  auto h = TripleFamily().induced({2.2, 2.5, 2.8, 2.9, 0.3, 1.5});
  // Lower sets: {1,2} ⊂ {1,2,3} ⊂ {1,2,3,4}.
  EXPECT_TRUE(precedes(h, 3, 4));
  EXPECT_FALSE(precedes(h, 2, 3));  // 1 and 2 share their parent
  auto p = comb_partition(h);
  ASSERT_NE(p.block_of(1), nullptr);
  EXPECT_EQ(*p.block_of(1), (Block{1}));
  EXPECT_EQ(*p.block_of(3), (Block{3, 4}));
  auto broom = TripleFamily().induced({1.2, 1.7, 0.3, 2.5});
  EXPECT_FALSE(precedes(broom, 1, 2));
  EXPECT_FALSE(precedes(broom, 2, 1));
  EXPECT_NE(p.text().find("comb {3,4}"), std::string::npos);
}

TEST(CombPartitionTest, BlocksAreChains) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    TripleOracle o(seed);
    auto h = o.prefix(300);
    auto p = comb_partition(h);
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
      const auto& blk = p.blocks[b];
      for (auto i : blk)
        for (auto j : blk) EXPECT_TRUE(precedes(h, i, j) || precedes(h, j, i)) << "seed=" << seed;
    }
  }
}

TEST(CombPartitionTest, HorizonRecoversTripleCombRegion) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TripleOracle o(seed);
    auto p = comb_partition(o, 50, 1u << 16);
    Block want;
    for (Label j = 1; j <= 50; ++j)
      if (o.region(j) == 2) want.push_back(j);
    std::size_t combs = 0;
    for (std::size_t b = 0; b < p.blocks.size(); ++b)
      if (p.comb[b]) {
        ++combs;
        EXPECT_EQ(p.blocks[b], want) << "seed=" << seed;
      }
    EXPECT_EQ(combs, 1u);
  }
}

TEST(AtomMass, DegenerateOracleHasFullAtom) {
  FlatOracle o;
  EXPECT_EQ(atom_mass_estimate(o, 1, 100), 1.0);
  EXPECT_EQ(atom_mass_estimate(o, 1, 1), 1.0);
  EXPECT_THROW(atom_mass_estimate(o, 5, 4), std::out_of_range);
}

TEST(AtomMass, TripleBroomAndCombDiffuse) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    TripleOracle o(seed);
    Label j = 1;
    while (o.region(j) != 1) ++j;
    const double a = atom_mass_estimate(o, j, 10000);
    EXPECT_NEAR(a, 1.0 / 3.0, 0.02);
    const double half = atom_mass_estimate(o, j, 5000);
    EXPECT_NEAR(a, half, 4 * std::sqrt(a * (1 - a) / 5000));
    Label c = 1;
    while (o.region(c) != 2) ++c;
    EXPECT_LT(atom_mass_estimate(o, c, 10000), 0.01);
  }
}

TEST(BlockMassesTest, TripleThirds) {
  TripleOracle o(7);
  auto m = classify_root_blocks(o.prefix(10000));
  EXPECT_NEAR(m.split, 1.0 / 3.0, 0.02);
  EXPECT_NEAR(m.star, 1.0 / 3.0, 0.02);
  EXPECT_NEAR(m.comb, 1.0 / 3.0, 0.02);
  EXPECT_LT(m.other, 0.01);
  auto t = classify_root_blocks(FiniteHierarchy::trivial(4));
  EXPECT_EQ(t.other, 1.0);
}

TEST(ChiSquareShapes, IdenticalDistinctAndInsufficient) {
  CountTable a{{"a", 50}, {"b", 70}, {"c", 3}};
  auto r = chi_square_shapes(a, a, 0.01);
  EXPECT_EQ(r.statistic, 0);
  EXPECT_TRUE(r.pass);
  EXPECT_NE(r.machine().find("pass=1"), std::string::npos);
  GeneratorSpec cs;
  cs.kind = "comb";
  OracleFactory dy(GeneratorSpec{}), comb(cs);
  auto counts = [](const OracleFactory& f) {
    return shape_counts([&](std::uint64_t s) { return f.make(s)->prefix(4); }, 5000);
  };
  EXPECT_FALSE(chi_square_shapes(counts(dy), counts(comb), 0.01).pass);
  EXPECT_THROW(chi_square_shapes(a, CountTable{}, 0.01), InsufficientCounts);
}

// Null calibration from the exact dyadic law at n = 3: two independent 10^5-sample tables.
TEST(ChiSquareShapes, NullCalibration) {
  auto t = WeightTree::dyadic(12);
  std::vector<std::pair<std::string, double>> law;
  for (const auto& s : enumerate_shapes(3)) {
    auto p = prob_exact(t, representative(s)).p * Rational(labelled_count(s));
    law.emplace_back(s.key, p.convert_to<double>());
  }
  auto draw = [&](Stream& rng) {
    CountTable c;
    for (int q = 0; q < 100000; ++q) {
      double u = rng.uniform();
      std::size_t k = 0;
      while (k + 1 < law.size() && (u -= law[k].second) >= 0) ++k;
      ++c[law[k].first];
    }
    return c;
  };
  int pass = 0;
  for (std::uint64_t m = 0; m < 100; ++m) {
    Stream ra(62, "a", m), rb(62, "b", m);
    pass += chi_square_shapes(draw(ra), draw(rb), 0.01).pass;
  }
  EXPECT_GE(pass, 99) << pass;
}
