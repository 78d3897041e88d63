#include "exhier/analysis.hpp"
#include "exhier/factory.hpp"
#include "exhier/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

using namespace exhier;

namespace {

std::vector<GeneratorSpec> all_specs() {
  std::vector<GeneratorSpec> out;
  for (std::string k : {"comb", "dyadic", "triple", "crt", "trivial"}) {
    GeneratorSpec s;
    s.kind = k;
    s.kmax = 12;
    out.push_back(s);
  }
  for (std::string t : {"remy", "caterpillar", "dyadic"}) {
    GeneratorSpec s;
    s.kind = "ehpf-table";
    s.table = t;
    s.depth = 6;
    out.push_back(s);
  }
  return out;
}

// MRCA closure from the block list: k lies in every block containing i and j.
bool mrca_brute(const FiniteHierarchy& h, Label i, Label j, Label k) {
  for (const auto& b : h.blocks()) {
    auto has = [&](Label x) { return std::binary_search(b.begin(), b.end(), x); };
    if (has(i) && has(j) && !has(k)) return false;
  }
  return true;
}

}  // namespace

TEST(Generators, ConsistentOverRandomSeedAndSize) {
  Stream pick(31);
  for (const auto& spec : all_specs()) {
    OracleFactory f(spec);
    for (int q = 0; q < 1000; ++q) {
      const std::uint64_t seed = pick.index(1u << 30);
      const std::size_t n = 1 + pick.index(8);
      auto o = f.make(seed);
      ASSERT_TRUE(check_consistency(*o, n)) << spec.kind << " " << spec.table << " seed=" << seed << " n=" << n;
    }
  }
}

TEST(Generators, WeightTreeOracleConsistent) {
  Stream pick(32);
  for (int q = 0; q < 20; ++q) {
    auto t = std::make_shared<const WeightTree>(random_weight_tree(pick, 3));
    for (int r = 0; r < 50; ++r) {
      WeightTreeOracle o(t, pick.index(1u << 30));
      ASSERT_TRUE(check_consistency(o, 1 + pick.index(8)));
    }
  }
}

TEST(Generators, DeterministicPerSeed) {
  for (const auto& spec : all_specs()) {
    OracleFactory f(spec);
    EXPECT_EQ(f.make(5)->prefix(12), f.make(5)->prefix(12)) << spec.kind;
  }
  OracleFactory f(GeneratorSpec{});
  int same = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) same += f.make(s)->prefix(10) == f.make(s + 100)->prefix(10);
  EXPECT_LT(same, 5);
}

TEST(Generators, MrcaQueriesMatchPrefix) {
  for (const auto& spec : all_specs()) {
    OracleFactory f(spec);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto o = f.make(seed);
      auto h = o->prefix(7);
      for (Label i = 1; i <= 7; ++i)
        for (Label j = 1; j <= 7; ++j)
          for (Label k = 1; k <= 7; ++k) {
            if (i == j) continue;
            ASSERT_EQ(o->in_mrca(i, j, k), mrca_brute(h, i, j, k)) << spec.kind << " " << i << j << k;
          }
    }
  }
}

TEST(Generators, TopBlockQueryMatchesLargePrefix) {
  for (std::string kind : {"triple", "dyadic", "comb"}) {
    GeneratorSpec s;
    s.kind = kind;
    OracleFactory f(s);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto o = f.make(seed);
      auto h = o->prefix(600);
      for (Label i = 1; i <= 8; ++i)
        for (Label j = i + 1; j <= 8; ++j) {
          const bool same = h.mrca_node(i, j) != h.root();
          EXPECT_EQ(o->same_top_block(i, j, 600), same) << kind << " seed=" << seed << " " << i << "," << j;
        }
    }
  }
}

TEST(CombGenerator, UpperLevelSets) {
  CombOracle o(3);
  auto h = o.prefix(30);
  std::vector<Label> order(30);
  std::iota(order.begin(), order.end(), 1);
  std::sort(order.begin(), order.end(), [&](Label a, Label b) { return o.uniform(a) > o.uniform(b); });
  // Blocks are exactly the top-k sets by U value.
  std::set<Block> want;
  for (std::size_t k = 2; k < 30; ++k) {
    Block b(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(b.begin(), b.end());
    want.insert(b);
  }
  auto nb = h.nontrivial_blocks();
  EXPECT_EQ(std::set<Block>(nb.begin(), nb.end()), want);
  EXPECT_EQ(o.prefix(1), FiniteHierarchy::trivial(1));
}

TEST(CombGenerator, DiffuseAtomMassNearZero) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    CombOracle o(seed);
    for (Label j = 1; j <= 5; ++j) EXPECT_LT(atom_mass_estimate(o, j, 4000), 0.005);
  }
}

TEST(DyadicGenerator, SpinalValueAtDivergenceDepth) {
  auto t = shared_dyadic(12);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    WeightTreeOracle o(t, seed, "dyadic");
    for (Label i = 1; i <= 4; ++i)
      for (Label j = i + 1; j <= 5; ++j) {
        auto a = t->address(o.uniform(i)), b = t->address(o.uniform(j));
        unsigned d = 0;
        while (d < a.size() && d < b.size() && a[d] == b[d]) ++d;
        EXPECT_EQ(o.spinal_exact(i, j), 1 - pow2_inv(d));
      }
  }
}

TEST(TripleGenerator, BroomRegionHasMassOneThird) {
  std::size_t hits = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    TripleOracle o(seed);
    for (Label j = 1; j <= 1000; ++j, ++total) hits += o.region(j) == 1;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(total);
  EXPECT_NEAR(p, 1.0 / 3.0, 4 * binomial_se(1.0 / 3.0, total));
}

TEST(TripleGenerator, ExampleFromValues) {
  EXPECT_EQ(TripleFamily().induced({0.5, 1.5, 2.5, 2.7}), FiniteHierarchy::from_blocks(4, {{3, 4}}));
}

TEST(CrtGenerator, SegmentCountAndFirstArrival) {
  Stream rng(33);
  auto s = crt_linebreak(rng, 7);
  EXPECT_EQ(s.tree.tree.size(), 7u);
  EXPECT_THROW(crt_linebreak(rng, 0), std::invalid_argument);
  std::vector<double> t1;
  for (int r = 0; r < 100000; ++r) {
    Stream q(34, "t1", static_cast<std::uint64_t>(r));
    t1.push_back(crt_linebreak(q, 1).arrivals[0]);
  }
  auto m = mean_of(t1);
  EXPECT_NEAR(m.mean, std::sqrt(std::acos(-1.0) / 2), 3 * m.se);
}

TEST(CrtGenerator, SecondAttachUniformOnFirstSegment) {
  std::vector<double> x;
  for (int r = 0; r < 10000; ++r) {
    Stream q(35, "attach", static_cast<std::uint64_t>(r));
    auto s = crt_linebreak(q, 2);
    const auto& seg = s.tree.tree.segments();
    x.push_back(seg[1].attach.coord(1) / seg[0].length);
  }
  EXPECT_TRUE(ks_uniform(x, 0.01).pass);
}

// Labelled laws of H_n and σ(H_n) agree for fixed σ.
TEST(Generators, ExchangeableUnderRelabeling) {
  Stream pick(36);
  for (const auto& spec : all_specs()) {
    if (spec.kind == "trivial") continue;
    OracleFactory f(spec);
    for (std::size_t n : {3u, 4u}) {
      const std::uint64_t reps = 4000;
      CountTable base, shapes;
      std::vector<FiniteHierarchy> hs;
      for (std::uint64_t r = 0; r < reps; ++r) hs.push_back(f.make(1000 + r)->prefix(n));
      for (const auto& h : hs) ++base[to_text(h)];
      for (int p = 0; p < 5; ++p) {
        auto sigma = random_permutation(n, pick);
        CountTable perm, ps, bs;
        for (std::uint64_t r = 0; r < reps; ++r) ++perm[to_text(permute(f.make(50000 + r)->prefix(n), sigma))];
        for (const auto& h : hs) ++bs[shape(h).key];
        for (std::uint64_t r = 0; r < reps; ++r) ++ps[shape(permute(f.make(50000 + r)->prefix(n), sigma)).key];
        EXPECT_TRUE(chi_square_two_sample(base, perm, 1e-4).pass) << spec.kind << " " << spec.table << " n=" << n;
        EXPECT_TRUE(chi_square_shapes(bs, ps, 1e-4).pass) << spec.kind << " n=" << n;
      }
    }
  }
}

TEST(GeneratorSpecParse, JsonAndFile) {
  auto s = spec_from_json(nlohmann::json::parse(R"({"kind":"triple","seed":9,"depth":5})"));
  EXPECT_EQ(s.kind, "triple");
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.depth, 5u);
  EXPECT_EQ(s.kmax, 32u);
  const std::string wpath = testing::TempDir() + "exhier_w.txt", cpath = testing::TempDir() + "exhier_g.json";
  std::ofstream(wpath) << "1 -> 1/2\n2 -> 1/2\n";
  std::ofstream(cpath) << R"({"kind":"weight-tree","weights":")" << wpath << R"("})";
  auto g = spec_from_file(cpath);
  auto o = make_oracle(g);
  EXPECT_EQ(o->name(), "weight-tree");
  EXPECT_TRUE(check_consistency(*o, 6));
  EXPECT_THROW(spec_from_file("/nonexistent/x.json"), std::runtime_error);
  GeneratorSpec bad;
  bad.kind = "banana";
  EXPECT_THROW(OracleFactory{bad}, UnknownGenerator);
  bad.kind = "ehpf-table";
  bad.table = "banana";
  EXPECT_THROW(OracleFactory{bad}, UnknownGenerator);
  bad.kind = "weight-tree";
  EXPECT_THROW(OracleFactory{bad}, std::invalid_argument);
}
