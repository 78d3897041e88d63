#include "exhier/generators.hpp"
#include "exhier/interval.hpp"
#include "exhier/shape.hpp"
#include "exhier/weight_tree.hpp"

#include <gtest/gtest.h>

using namespace exhier;

namespace {

// Terminal cells: every node with positive gap (bottom nodes are all gap).
std::vector<std::size_t> terminals(const WeightTree& t) {
  std::vector<std::size_t> out;
  for (std::size_t id = 0; id < t.size(); ++id)
    if (t.gap(id) > 0) out.push_back(id);
  return out;
}

// Blocks from subtree membership, without the library's induced_hierarchy.
FiniteHierarchy blocks_from_terminals(const WeightTree& t, const std::vector<std::size_t>& term) {
  std::vector<Block> blocks;
  for (std::size_t id = 0; id < t.size(); ++id) {
    Block b;
    for (std::size_t j = 0; j < term.size(); ++j)
      if (t.is_ancestor(id, term[j])) b.push_back(static_cast<Label>(j + 1));
    if (b.size() >= 2 && b.size() < term.size()) blocks.push_back(b);
  }
  return FiniteHierarchy::from_blocks(term.size(), blocks);
}

// Exact law of H_n by enumerating all assignments of labels to terminal cells.
std::map<FiniteHierarchy, Rational> brute_law(const WeightTree& t, std::size_t n, Rational* unresolved = nullptr) {
  auto cells = terminals(t);
  std::map<FiniteHierarchy, Rational> law;
  std::vector<std::size_t> idx(n, 0);
  const std::size_t D = t.depth();
  if (unresolved) *unresolved = 0;
  for (;;) {
    std::vector<std::size_t> term(n);
    Rational p = 1;
    for (std::size_t j = 0; j < n; ++j) {
      term[j] = cells[idx[j]];
      p *= t.gap(term[j]);
    }
    law[blocks_from_terminals(t, term)] += p;
    if (unresolved && t.truncated()) {
      bool clash = false;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
          if (term[a] == term[b] && t.node(term[a]).path.size() == D) clash = true;
      if (clash) *unresolved += p;
    }
    std::size_t q = 0;
    while (q < n && ++idx[q] == cells.size()) idx[q++] = 0;
    if (q == n) break;
  }
  return law;
}

WeightTree sample_tree() {
  return parse_weight_tree(
      "# two levels with a deficit\n"
      "1 -> 1/2\n"
      "2 -> 1/3\n"
      "1,1 -> 1/4\n"
      "1,2 -> 1/6\n"
      "(2,1) -> 1/3\n"
      "2.1.1 -> 1/5\n");
}

}  // namespace

TEST(WeightTreeFormat, ParseAndRoundTrip) {
  auto t = sample_tree();
  EXPECT_EQ(t.size(), 7u);
  EXPECT_EQ(t.gap(0), Rational(1, 6));
  EXPECT_EQ(t.gap(t.find({1})), Rational(1, 12));
  auto back = parse_weight_tree(to_text(t));
  EXPECT_EQ(to_text(back), to_text(t));
  auto d = WeightTree::dyadic(3);
  EXPECT_TRUE(d.truncated());
  EXPECT_EQ(to_text(parse_weight_tree(to_text(d))), to_text(d));
  EXPECT_TRUE(parse_weight_tree(to_text(d)).truncated());
}

TEST(WeightTreeFormat, RejectsInvalidTrees) {
  EXPECT_THROW(parse_weight_tree("1 -> 1/3\n2 -> 1/2\n"), InvalidWeightTree);   // increasing siblings
  EXPECT_THROW(parse_weight_tree("1 -> 2/3\n2 -> 1/2\n"), InvalidWeightTree);   // exceeds parent
  EXPECT_THROW(parse_weight_tree("1,1 -> 1/2\n"), InvalidWeightTree);           // missing parent
  EXPECT_THROW(parse_weight_tree("2 -> 1/2\n"), InvalidWeightTree);             // gap in order
  EXPECT_THROW(parse_weight_tree("1 -> 0\n"), InvalidWeightTree);
  EXPECT_THROW(parse_weight_tree("1 => 1/2\n"), InvalidWeightTree);
  EXPECT_THROW(parse_weight_tree("0 -> 1/2\n"), InvalidWeightTree);
}

TEST(WeightTreeRatios, DualityRecoversWeights) {
  Stream rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = random_weight_tree(rng, 3);
    auto back = WeightTree::from_ratios(t.ratios());
    EXPECT_EQ(to_text(back), to_text(t));
    for (const auto& [path, x] : t.ratios()) {
      auto id = static_cast<std::size_t>(t.find(path));
      EXPECT_EQ(x, t.node(id).weight / t.node(static_cast<std::size_t>(t.node(id).parent)).weight);
    }
  }
}

TEST(Address, DyadicExamples) {
  auto d = WeightTree::dyadic(4);
  EXPECT_EQ(d.address(0.3), (Composition{1, 2, 1, 1}));
  EXPECT_EQ(d.address(0.0), (Composition{1, 1, 1, 1}));
  EXPECT_EQ(d.address(0.5), (Composition{2, 1, 1, 1}));  // left-closed
  EXPECT_EQ(d.address(1.0), (Composition{}));
  EXPECT_THROW(d.address(1.5), std::out_of_range);
}

TEST(Address, StopsInDeficitGap) {
  auto t = sample_tree();
  EXPECT_EQ(t.address(0.9), (Composition{}));
  EXPECT_EQ(t.address(0.45), (Composition{1}));
  EXPECT_EQ(t.address(0.6), (Composition{2, 1, 1}));
  EXPECT_EQ(t.locate(Rational(5, 6)), 0u);
}

TEST(SampleHierarchy, DyadicExample) {
  auto d = WeightTree::dyadic(8);
  auto h = sample_hierarchy(d, std::vector<double>{0.1, 0.2, 0.9});
  EXPECT_EQ(h, FiniteHierarchy::from_blocks(3, {{1, 2}}));
  EXPECT_EQ(shape(h).key, shape(FiniteHierarchy::from_blocks(3, {{1, 2}})).key);
  EXPECT_EQ(sample_hierarchy(d, std::vector<double>{0.7}), FiniteHierarchy::trivial(1));
}

TEST(SampleHierarchy, TripleAndCombExamples) {
  EXPECT_EQ(TripleFamily().induced({0.5, 1.5, 2.5, 2.7}), FiniteHierarchy::from_blocks(4, {{3, 4}}));
  EXPECT_EQ(TripleFamily().induced({1.1, 1.5, 1.7}), FiniteHierarchy::trivial(3));
  EXPECT_EQ(ErosionCombFamily().induced({0.3, 0.7, 0.5}), FiniteHierarchy::from_blocks(3, {{2, 3}}));
  EXPECT_EQ(ErosionCombFamily().induced({0.3}), FiniteHierarchy::trivial(1));
  // Broom: a star below its own vertex when other regions are present.
  EXPECT_EQ(TripleFamily().induced({1.1, 1.5, 1.7, 0.2}), FiniteHierarchy::from_blocks(4, {{1, 2, 3}}));
  EXPECT_EQ(TripleFamily().induced({2.1, 2.4, 2.9, 0.2}), FiniteHierarchy::from_blocks(4, {{1, 2, 3}, {1, 2}}));
}

TEST(SampleHierarchy, AlwaysValid) {
  Stream rng(22);
  auto d = WeightTree::dyadic(6);
  TripleFamily tf;
  NonWellOrderedFamily nw;
  for (int q = 0; q < 500; ++q) {
    for (std::size_t n : {1u, 2u, 5u, 9u}) {
      EXPECT_EQ(sample_hierarchy(d, n, rng).n(), n);
      EXPECT_EQ(sample_hierarchy(tf, n, rng).n(), n);
      EXPECT_EQ(sample_hierarchy(nw, n, rng).n(), n);
    }
  }
}

TEST(NonWellOrdered, CoverAndBlocks) {
  NonWellOrderedFamily nw;
  EXPECT_TRUE(nw.in_open_set(0.5));
  EXPECT_TRUE(nw.in_open_set(0.0 + 1e-3));
  for (std::size_t k = 1; k < nw.cover().size(); ++k) EXPECT_LE(nw.cover()[k - 1].second, nw.cover()[k].first);
  // Total length of the cover is below 1/2, so most of [0,1] is complement.
  double len = 0;
  for (const auto& [a, b] : nw.cover()) len += std::min(b, 1.0) - std::max(a, 0.0);
  EXPECT_LT(len, 0.5);
  // Two nearby values inside one component of the cover give no separating block.
  auto c = *std::max_element(nw.cover().begin() + 1, nw.cover().end() - 1, [](const auto& a, const auto& b) {
    return a.second - a.first < b.second - b.first;
  });
  double x = c.first + (c.second - c.first) * 0.4, y = c.first + (c.second - c.first) * 0.6;
  for (const auto& b : nw.induced({x, y, 0.0}).blocks())
    if (b.size() >= 2) {
      EXPECT_EQ(std::count(b.begin(), b.end(), Label{1}), std::count(b.begin(), b.end(), Label{2}));
    }
  EXPECT_FALSE(nw.complement_meets(x, y));
}

TEST(ProbExact, TwoLabelsAlwaysOne) {
  Stream rng(23);
  for (int q = 0; q < 5; ++q) EXPECT_EQ(prob_exact(random_weight_tree(rng, 2), FiniteHierarchy::trivial(2)).p, 1);
  EXPECT_EQ(prob_exact(WeightTree::dyadic(3), FiniteHierarchy::trivial(1)).p, 1);
}

TEST(ProbExact, FlatThirds) {
  auto t = WeightTree::flat({Rational(1, 3), Rational(1, 3), Rational(1, 3)});
  EXPECT_FALSE(t.truncated());
  EXPECT_EQ(prob_exact(t, FiniteHierarchy::trivial(3)).p, Rational(1, 3));
  EXPECT_EQ(prob_exact(t, FiniteHierarchy::from_blocks(3, {{1, 2}})).p, Rational(2, 9));
  EXPECT_EQ(truncation_bound(t, 3), 0);
}

TEST(ProbExact, MatchesBruteForceEnumeration) {
  Stream rng(24);
  std::vector<WeightTree> trees{WeightTree::dyadic(3), sample_tree(),
                                WeightTree::flat({Rational(1, 2), Rational(1, 4)})};
  for (int q = 0; q < 3; ++q) trees.push_back(random_weight_tree(rng, 2));
  for (const auto& t : trees)
    for (std::size_t n = 2; n <= 4; ++n) {
      Rational unresolved;
      auto law = brute_law(t, n, &unresolved);
      Rational total = 0;
      for (const auto& h : enumerate_hierarchies(n)) {
        auto r = prob_exact(t, h);
        Rational want = law.count(h) ? law.at(h) : Rational(0);
        ASSERT_EQ(r.p, want) << to_text(t) << "\n" << to_text(h);
        total += r.p;
      }
      EXPECT_EQ(total, 1);
      EXPECT_EQ(truncation_bound(t, n), unresolved) << to_text(t);
    }
}

// Depth-one trees: literal sum over label-to-address assignments of Π x_{address}.
TEST(ProbExact, DepthOneLiteralMonomial) {
  auto t = WeightTree::flat({Rational(2, 5), Rational(1, 5), Rational(1, 5)});  // gap 1/5
  const std::size_t n = 4;
  std::map<FiniteHierarchy, Rational> m;
  for (std::size_t code = 0; code < 256; ++code) {
    std::vector<int> addr(n);
    Rational w = 1;
    for (std::size_t j = 0; j < n; ++j) {
      addr[j] = static_cast<int>((code >> (2 * j)) & 3u);  // 0 = gap, 1..3 children
      w *= addr[j] == 0 ? Rational(1, 5) : t.node(static_cast<std::size_t>(addr[j])).weight;
    }
    std::vector<Block> blocks;
    for (int c = 1; c <= 3; ++c) {
      Block b;
      for (std::size_t j = 0; j < n; ++j)
        if (addr[j] == c) b.push_back(static_cast<Label>(j + 1));
      if (b.size() >= 2 && b.size() < n) blocks.push_back(b);
    }
    m[FiniteHierarchy::from_blocks(n, blocks)] += w;
  }
  for (const auto& h : enumerate_hierarchies(n)) EXPECT_EQ(prob_exact(t, h).p, m.count(h) ? m[h] : Rational(0));
}

TEST(ProbExact, DyadicCherryAndStar) {
  auto d = WeightTree::dyadic(10);
  auto cherry = prob_exact(d, FiniteHierarchy::from_blocks(3, {{1, 2}}));
  EXPECT_LE(abs(cherry.p - Rational(1, 3)), cherry.truncation_bound);
  auto star = prob_exact(d, FiniteHierarchy::trivial(3));
  EXPECT_LE(star.p, star.truncation_bound);
  EXPECT_THROW(prob_exact(d, FiniteHierarchy::trivial(3), Rational(1, 1000000)), InsufficientDepth);
}

TEST(ProbExact, MultiplicationRule) {
  Stream rng(25);
  auto t = random_weight_tree(rng, 3);
  for (const auto& h : enumerate_hierarchies(3)) {
    Rational sum = 0;
    for (const auto& e : extensions(h)) sum += prob_exact(t, e).p;
    EXPECT_EQ(sum, prob_exact(t, h).p);
  }
}
