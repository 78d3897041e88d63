#include "exhier/realtree.hpp"
#include "exhier/stats.hpp"

#include <gtest/gtest.h>

using namespace exhier;

namespace {

using P = SparsePoint<double>;
using Q = SparsePoint<Rational>;

P pt(std::vector<double> c) {
  std::vector<P::Entry> e;
  for (std::size_t i = 0; i < c.size(); ++i) e.emplace_back(static_cast<std::uint32_t>(i + 1), c[i]);
  return P(e);
}

// Random line-breaking tree with `k` segments and random sample points on it.
LineBreakTree<double> random_tree(Stream& rng, std::size_t k) {
  LineBreakTree<double> t;
  for (std::size_t s = 1; s <= k; ++s) {
    P attach;
    if (s > 1) {
      const auto& seg = t.segments()[rng.index(t.size())];
      // Attach at an end, a start or an interior point.
      double u = rng.index(3) == 0 ? seg.length : rng.uniform() * seg.length;
      attach = seg.at(u);
    }
    t.add_segment(attach, static_cast<std::uint32_t>(s), 0.1 + rng.uniform());
  }
  return t;
}

P random_point(const LineBreakTree<double>& t, Stream& rng) {
  const auto& seg = t.segments()[rng.index(t.size())];
  switch (rng.index(3)) {
    case 0: return seg.attach;
    case 1: return seg.end();
    default: return seg.at(rng.uniform() * seg.length);
  }
}

// Brute-force fringe test straight from the staircase parametrization.
bool on_path_brute(const P& y, const P& x) {
  if (y == x) return true;
  const auto& xe = x.entries();
  for (std::size_t m = 0; m <= xe.size(); ++m) {
    P base = P(std::vector<P::Entry>(xe.begin(), xe.begin() + static_cast<std::ptrdiff_t>(m)));
    if (m == xe.size()) {
      if (y == base) return true;
      continue;
    }
    // y = base + s e_{next}, 0 <= s <= x_next
    const auto [idx, val] = xe[m];
    if (y.last_index() == idx && project(y, idx - 1) == base && y.coord(idx) <= val + 1e-12) return true;
    if (y == base) return true;
  }
  return false;
}

}  // namespace

TEST(SparsePointTest, ProjectExamples) {
  EXPECT_EQ(project(pt({0.3, 0.2, 0.1}), 2), pt({0.3, 0.2}));
  EXPECT_TRUE(project(pt({0.3, 0.2, 0.1}), 0).is_origin());
  auto x = pt({0.3, 0.2, 0.1, 0.4});
  for (std::uint32_t m = 0; m <= 5; ++m)
    for (std::uint32_t k = 0; k <= 5; ++k) EXPECT_EQ(project(project(x, m), k), project(x, std::min(m, k)));
}

TEST(SparsePointTest, StoresPositiveEntriesOnly) {
  P x({{3, 0.5}, {1, 0.0}, {2, 0.25}});
  EXPECT_EQ(x.entries().size(), 2u);
  EXPECT_DOUBLE_EQ(x.norm(), 0.75);
  EXPECT_THROW(P({{1, -0.5}}), std::invalid_argument);
  EXPECT_THROW(P({{0, 0.5}}), std::invalid_argument);
  EXPECT_THROW(x.extended(2, 0.1), std::invalid_argument);
}

TEST(SpecialPath, Examples) {
  EXPECT_TRUE(on_special_path(pt({0.3}), pt({0.3, 0.2})));
  EXPECT_TRUE(on_special_path(P::origin(), pt({0.3, 0.2})));
  EXPECT_FALSE(on_special_path(pt({0.1, 0.2}), pt({0.3, 0.2})));
  EXPECT_TRUE(on_special_path(pt({0.1}), pt({0.3, 0.2})));
  EXPECT_TRUE(on_special_path(pt({0.3, 0.1}), pt({0.3, 0.2})));
}

TEST(Fringe, Examples) {
  EXPECT_TRUE(fringe_contains(P::origin(), pt({0.4, 0.1})));
  EXPECT_TRUE(fringe_contains(pt({0.3}), pt({0.3, 0.2})));
  EXPECT_FALSE(fringe_contains(pt({0.3, 0.2}), pt({0.3})));
}

TEST(Fringe, MatchesBruteForceAndIsTransitive) {
  Stream rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = random_tree(rng, 6);
    std::vector<P> pts;
    for (int q = 0; q < 12; ++q) pts.push_back(random_point(t, rng));
    for (const auto& x : pts)
      for (const auto& y : pts) {
        ASSERT_EQ(on_special_path(x, y), on_path_brute(x, y)) << to_string(x) << " " << to_string(y);
        for (const auto& z : pts) {
          if (on_special_path(x, y) && on_special_path(y, z)) {
            ASSERT_TRUE(on_special_path(x, z));
          }
        }
      }
  }
}

TEST(Fringe, ProjectionCommutesWithSpecialPaths) {
  Stream rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = random_tree(rng, 5);
    auto x = random_point(t, rng);
    auto y = random_point(t, rng);
    if (!on_special_path(y, x)) continue;
    for (std::uint32_t m = 0; m <= 6; ++m) ASSERT_TRUE(on_special_path(project(y, m), project(x, m)));
  }
}

TEST(Fringe, SampleIndexSetsAreNested) {
  Stream rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = random_tree(rng, 5);
    std::vector<P> samples, probes;
    for (int q = 0; q < 8; ++q) samples.push_back(random_point(t, rng));
    for (int q = 0; q < 8; ++q) probes.push_back(random_point(t, rng));
    std::vector<std::vector<bool>> sets;
    for (const auto& x : probes) {
      std::vector<bool> s;
      for (const auto& tj : samples) s.push_back(fringe_contains(x, tj));
      sets.push_back(s);
    }
    for (const auto& a : sets)
      for (const auto& b : sets) {
        bool ab = true, ba = true, disjoint = true;
        for (std::size_t j = 0; j < a.size(); ++j) {
          if (a[j] && !b[j]) ab = false;
          if (b[j] && !a[j]) ba = false;
          if (a[j] && b[j]) disjoint = false;
        }
        ASSERT_TRUE(ab || ba || disjoint);
      }
  }
}

TEST(LineBreak, Validation) {
  LineBreakTree<double> t;
  EXPECT_THROW(t.add_segment(pt({0.1}), 1, 1.0), InvalidRealTree);
  t.add_segment(P::origin(), 1, 1.0);
  EXPECT_THROW(t.add_segment(pt({0.5}), 1, 1.0), InvalidRealTree);
  EXPECT_THROW(t.add_segment(pt({1.5}), 2, 1.0), InvalidRealTree);
  EXPECT_THROW(t.add_segment(pt({0.5}), 2, 0.0), InvalidRealTree);
  t.add_segment(pt({0.5}), 3, 0.5);
  EXPECT_TRUE(t.contains(P({{1, 0.5}, {3, 0.25}})));
  EXPECT_FALSE(t.contains(P({{1, 0.6}, {3, 0.25}})));
  EXPECT_DOUBLE_EQ(t.total_length(), 1.5);
}

TEST(Derived, Examples) {
  EXPECT_EQ(derived_hierarchy<double>({pt({0.5}), pt({0.5}), pt({0.2})}, 3), FiniteHierarchy::from_blocks(3, {{1, 2}}));
  EXPECT_EQ(derived_hierarchy<double>({pt({0.7})}, 1), FiniteHierarchy::trivial(1));
  EXPECT_EQ(derived_hierarchy<double>({P::origin(), P::origin(), P::origin(), P::origin()}, 4), FiniteHierarchy::trivial(4));
  EXPECT_THROW(derived_hierarchy<double>({pt({0.7})}, 2), std::invalid_argument);
}

TEST(Derived, BranchAtAttachPoint) {
  LineBreakTree<double> t;
  t.add_segment(P::origin(), 1, 1.0);
  t.add_segment(pt({0.5}), 2, 1.0);
  std::vector<P> s{pt({1.0}), P({{1, 0.5}, {2, 0.3}}), pt({0.2})};
  EXPECT_EQ(derived_hierarchy(t, s, 3), FiniteHierarchy::from_blocks(3, {{1, 2}}));
}

TEST(Derived, FuzzAgreesWithDenseCandidateSet) {
  Stream rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = random_tree(rng, 4);
    std::vector<P> s;
    for (int q = 0; q < 7; ++q) s.push_back(random_point(t, rng));
    auto h = derived_hierarchy(t, s, s.size());
    // Dense probe set: many points along each segment must not add blocks.
    std::set<Block> blocks;
    for (const auto& seg : t.segments())
      for (int q = 0; q <= 50; ++q) {
        auto x = seg.at(seg.length * q / 50.0);
        Block b;
        for (std::size_t j = 0; j < s.size(); ++j)
          if (fringe_contains(x, s[j])) b.push_back(static_cast<Label>(j + 1));
        if (b.size() >= 2 && b.size() < s.size()) blocks.insert(b);
      }
    for (const auto& b : blocks) ASSERT_TRUE(h.has_block(b)) << format_block(b);
  }
}

TEST(Sampling, SingleAtom) {
  WeightedTree<double> wt;
  wt.tree.add_segment(P::origin(), 1, 1.0);
  wt.atoms.push_back({pt({0.4}), 1.0});
  wt.validate();
  Stream rng(1);
  for (int q = 0; q < 100; ++q) EXPECT_EQ(sample_point(wt, rng), pt({0.4}));
}

TEST(Sampling, LengthMeasureMeanNorm) {
  WeightedTree<double> wt;
  wt.tree.add_segment(P::origin(), 1, 1.0);
  wt.densities.push_back({0, 0.0, 1.0, 1.0});
  Stream rng(2);
  std::vector<double> x;
  for (int q = 0; q < 100000; ++q) x.push_back(sample_point(wt, rng).norm());
  auto m = mean_of(x);
  EXPECT_NEAR(m.mean, 0.5, 3 * std::sqrt(1.0 / 12.0 / 1e5));
}

TEST(Sampling, TwoHalfAtoms) {
  WeightedTree<double> wt;
  wt.tree.add_segment(P::origin(), 1, 1.0);
  wt.tree.add_segment(pt({0.5}), 2, 1.0);
  wt.atoms.push_back({pt({1.0}), 0.5});
  wt.atoms.push_back({P({{1, 0.5}, {2, 1.0}}), 0.5});
  Stream rng(8);
  const int N = 100000;
  int first = 0;
  for (int q = 0; q < N; ++q) first += sample_point(wt, rng) == pt({1.0});
  EXPECT_NEAR(first / double(N), 0.5, 3 * binomial_se(0.5, N));
}

TEST(Sampling, RejectsBadTrees) {
  WeightedTree<double> wt;
  wt.tree.add_segment(P::origin(), 1, 1.0);
  wt.atoms.push_back({pt({2.0}), 1.0});
  EXPECT_THROW(wt.validate(), InvalidRealTree);
  WeightedTree<double> empty;
  empty.tree.add_segment(P::origin(), 1, 1.0);
  Stream rng(1);
  EXPECT_THROW(sample_point(empty, rng), InvalidRealTree);
}

TEST(Serialization, JsonRoundTripExactAndDouble) {
  WeightedTree<Rational> wt;
  wt.tree.add_segment(Q::origin(), 1, Rational(1, 2));
  wt.tree.add_segment(Q::axis(1, Rational(1, 4)), 2, Rational(1, 3));
  wt.atoms.push_back({Q::axis(1, Rational(1, 2)), Rational(2, 3)});
  wt.densities.push_back({1, 0, Rational(1, 3), Rational(1, 3)});
  wt.validate();
  auto back = weighted_tree_from_json<Rational>(nlohmann::json::parse(weighted_tree_json(wt).dump()));
  EXPECT_TRUE(back.tree.is_prefix_of(wt.tree));
  EXPECT_TRUE(wt.tree.is_prefix_of(back.tree));
  EXPECT_EQ(back.atoms[0].mass, Rational(2, 3));
  EXPECT_EQ(back.densities[0].hi, Rational(1, 3));

  Stream rng(9);
  auto c = crt_linebreak(rng, 10);
  auto cj = weighted_tree_from_json<double>(nlohmann::json::parse(weighted_tree_json(c.tree).dump()));
  EXPECT_TRUE(cj.tree.is_prefix_of(c.tree.tree));
  EXPECT_EQ(cj.densities.size(), 10u);
}

TEST(Dot, SplitsSegmentsAtAttachPoints) {
  LineBreakTree<double> t;
  t.add_segment(P::origin(), 1, 1.0);
  t.add_segment(pt({0.5}), 2, 1.0);
  auto dot = to_dot(t);
  std::size_t edges = 0;
  for (std::size_t p = dot.find("->"); p != std::string::npos; p = dot.find("->", p + 1)) ++edges;
  EXPECT_EQ(edges, 3u);
}

TEST(Crt, StepsAndMasses) {
  Stream rng(10);
  auto c = crt_linebreak(rng, 7);
  EXPECT_EQ(c.tree.tree.size(), 7u);
  c.tree.validate();
  EXPECT_NEAR(c.tree.total_mass(), 1.0, 1e-12);
  EXPECT_NEAR(c.tree.tree.total_length(), c.arrivals.back(), 1e-12);
  for (std::size_t k = 1; k < c.arrivals.size(); ++k) EXPECT_LT(c.arrivals[k - 1], c.arrivals[k]);
  EXPECT_THROW(crt_linebreak(rng, 0), std::invalid_argument);
}
