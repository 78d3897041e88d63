#include "exhier/xi.hpp"

#include <gtest/gtest.h>

using namespace exhier;

namespace {

// Preimage of F_x on a grid of 2^g midpoints, evaluated through xi() alone.
struct GridPreimage {
  std::size_t first = 0, count = 0;
  bool contiguous = true;
};

GridPreimage grid_preimage(const BeadEmbedding& e, const SparsePoint<Rational>& x, unsigned g) {
  GridPreimage out;
  const std::size_t N = std::size_t(1) << g;
  std::int64_t last = -2;
  for (std::size_t q = 0; q < N; ++q) {
    Rational u = (Rational(q) + Rational(1, 2)) / Rational(N);
    if (!fringe_contains(x, e.xi(u))) continue;
    if (out.count == 0) out.first = q;
    else if (last != static_cast<std::int64_t>(q) - 1) out.contiguous = false;
    last = static_cast<std::int64_t>(q);
    ++out.count;
  }
  return out;
}

// Dyadic part, an atom and a chain with deficits standing in for erosion.
WeightTree triple_like() {
  WeightTree t;
  t.add({1}, Rational(1, 3));
  t.add({2}, Rational(1, 3));
  t.add({3}, Rational(1, 3));
  t.add({1, 1}, Rational(1, 6));
  t.add({1, 2}, Rational(1, 6));
  t.add({1, 1, 1}, Rational(1, 12));
  t.add({1, 1, 2}, Rational(1, 12));
  Composition c{3};
  Rational w = Rational(1, 3);
  for (int k = 0; k < 5; ++k) {
    c.push_back(1);
    w -= Rational(1, 18);
    t.add(c, w);
  }
  return t;
}

}  // namespace

TEST(Xi, TrivialSourceIsConstant) {
  WeightTree t;
  BeadEmbedding e(t);
  EXPECT_EQ(e.tree().size(), 0u);
  for (auto u : {Rational(0), Rational(1, 3), Rational(1)}) EXPECT_EQ(e.xi(u), SparsePoint<Rational>::origin());
  EXPECT_THROW(e.xi(Rational(2)), std::out_of_range);
  EXPECT_TRUE(check_xi_properties(e).ok());
}

TEST(Xi, DyadicLeftChildPreimageIsHalf) {
  auto t = WeightTree::dyadic(6);
  BeadEmbedding e(t);
  auto x = e.point(static_cast<std::size_t>(t.find({1})));
  auto g = grid_preimage(e, x, 10);
  EXPECT_TRUE(g.contiguous);
  EXPECT_EQ(g.count, 512u);
  EXPECT_EQ(e.point(0), SparsePoint<Rational>::origin());
  EXPECT_EQ(x.norm(), Rational(1, 2));
}

TEST(Xi, PropertiesHoldExactlyOnDyadicTrees) {
  for (unsigned d = 1; d <= 8; ++d) {
    auto t = WeightTree::dyadic(d);
    BeadEmbedding e(t);
    auto r = check_xi_properties(e);
    EXPECT_TRUE(r.ok()) << "depth " << d << " interval=" << r.interval_failures << " measure=" << r.measure_failures;
    EXPECT_GT(r.candidates, std::size_t(1) << d);
    EXPECT_TRUE(check_xi_monotone(e));
  }
}

// Grid oracle: the preimage through xi() is contiguous and its length is the fringe mass.
TEST(Xi, GridOracleAgreesOnDyadicAndTripleLike) {
  std::vector<WeightTree> trees{WeightTree::dyadic(4), triple_like()};
  for (const auto& t : trees) {
    BeadEmbedding e(t);
    const auto wt = e.weighted();
    EXPECT_EQ(wt.total_mass(), 1);
    const unsigned g = 12;
    for (std::size_t id = 0; id < t.size(); ++id) {
      const auto& x = e.point(id);
      Rational pm = 0;
      for (const auto& a : wt.atoms)
        if (fringe_contains(x, a.location)) pm += a.mass;
      auto pre = grid_preimage(e, x, g);
      EXPECT_TRUE(pre.contiguous) << to_text(t) << " node " << id;
      // An interval of length pm holds pm·2^g midpoints up to one; exact when dyadic.
      const Rational got(pre.count, std::size_t(1) << g);
      EXPECT_LE(abs(got - pm), Rational(1, std::size_t(1) << g)) << "node " << id;
      if (t.truncated()) {
        EXPECT_EQ(got, pm) << "node " << id;
      }
    }
    EXPECT_TRUE(check_xi_properties(e).ok());
    EXPECT_TRUE(check_xi_monotone(e));
  }
}

TEST(Xi, NormEqualsOneMinusWeight) {
  auto t = triple_like();
  BeadEmbedding e(t);
  for (std::size_t id = 0; id < t.size(); ++id) EXPECT_EQ(e.point(id).norm(), 1 - t.node(id).weight);
  auto cells = e.cells();
  Rational total = 0;
  for (const auto& c : cells) total += c.mass;
  EXPECT_EQ(total, 1);
  // xi_k projects onto the first k strings.
  for (const auto& c : cells) EXPECT_EQ(e.xi_k(c.lo, 1), project(e.point(c.node), 1));
}

TEST(Xi, RandomRationalTrees) {
  Stream rng(71);
  for (int q = 0; q < 20; ++q) {
    WeightTree t;
    std::vector<std::size_t> level{0};
    for (int d = 0; d < 3; ++d) {
      std::vector<std::size_t> next;
      for (auto id : level) {
        const auto r = 1 + rng.index(3);
        Rational left = t.node(id).weight;
        for (std::size_t c = 0; c < r; ++c) {
          Rational w = left * Rational(1 + static_cast<long long>(rng.index(3)), 4);
          if (!next.empty() && t.node(next.back()).parent == static_cast<std::int64_t>(id))
            w = std::min(w, t.node(next.back()).weight);
          if (w <= 0) break;
          next.push_back(t.add_child(id, w));
          left -= w;
        }
      }
      level = next;
    }
    BeadEmbedding e(t);
    EXPECT_TRUE(check_xi_properties(e).ok()) << to_text(t);
    EXPECT_TRUE(check_xi_monotone(e)) << to_text(t);
  }
}
