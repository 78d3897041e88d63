#include "exhier/parallel.hpp"
#include "exhier/rng.hpp"
#include "exhier/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace exhier;

TEST(ChiSquare, QuantileAndTail) {
  EXPECT_NEAR(chi_square_upper(3.841458820694124, 1), 0.05, 1e-9);
  EXPECT_NEAR(chi_square_quantile(0.01, 2), -2 * std::log(0.01), 1e-9);
  EXPECT_EQ(chi_square_upper(5.0, 0), 1.0);
}

TEST(ChiSquare, TwoSamplePoolsSmallCells) {
  CountTable a{{"x", 500}, {"y", 500}, {"r1", 1}, {"r2", 2}};
  CountTable b{{"x", 480}, {"y", 520}, {"r2", 1}, {"r3", 1}};
  auto r = chi_square_two_sample(a, b, 0.01);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.dof, 1);  // x, y; the rare cells pool into one below the expected-count floor
  CountTable c{{"x", 800}, {"y", 200}};
  EXPECT_FALSE(chi_square_two_sample(a, c, 0.01).pass);
}

TEST(ChiSquare, GoodnessOfFit) {
  Stream rng(81);
  CountTable c;
  for (int q = 0; q < 20000; ++q) ++c[rng.uniform() < 0.25 ? "a" : "b"];
  EXPECT_TRUE(chi_square_gof(c, {{"a", 0.25}, {"b", 0.75}}, 0.01).pass);
  EXPECT_FALSE(chi_square_gof(c, {{"a", 0.5}, {"b", 0.5}}, 0.01).pass);
  c["stray"] = 50;
  EXPECT_FALSE(chi_square_gof(c, {{"a", 0.25}, {"b", 0.75}}, 0.01).pass);
}

TEST(KolmogorovSmirnov, UniformAndSkewed) {
  Stream rng(82);
  std::vector<double> u, v;
  for (int q = 0; q < 5000; ++q) {
    u.push_back(rng.uniform());
    v.push_back(u.back() * u.back());
  }
  EXPECT_TRUE(ks_uniform(u, 0.01).pass);
  EXPECT_FALSE(ks_uniform(v, 0.01).pass);
  EXPECT_NEAR(kolmogorov_pvalue(0.0, 100), 1.0, 1e-12);
}

TEST(MeanEstimateTest, MeanAndStandardError) {
  auto m = mean_of({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-12);
  EXPECT_DOUBLE_EQ(binomial_se(0.5, 100), 0.05);
}

TEST(Rng, StreamsAreDeterministicAndDistinct) {
  Stream a(5, "tag", 1), b(5, "tag", 1), c(5, "tag", 2), d(5, "other", 1);
  for (int q = 0; q < 10; ++q) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
    EXPECT_NE(x, d.uniform());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  Stream e(9);
  for (int q = 0; q < 1000; ++q) EXPECT_LT(e.index(7), 7u);
  std::vector<double> ex;
  for (int q = 0; q < 20000; ++q) ex.push_back(e.exponential());
  auto m = mean_of(ex);
  EXPECT_NEAR(m.mean, 1.0, 4 * m.se);
}

TEST(Rng, LabelUniformIsExactAndOffGrid) {
  LabelUniform u(3);
  for (std::uint64_t j = 1; j <= 1000; ++j) {
    EXPECT_EQ(u.numerator(j) % 2, 1u);
    EXPECT_LT(u.numerator(j), std::uint64_t(1) << LabelUniform::kBits);
    EXPECT_EQ(Rational(u.value(j)), u.exact(j));
    EXPECT_EQ(Rational(3.0 * u.value(j)), 3 * u.exact(j));
    EXPECT_EQ(u.value(j), LabelUniform(3).value(j));
  }
  EXPECT_NE(u.value(1), LabelUniform(4).value(1));
}

TEST(Parallel, ReduceIndependentOfJobs) {
  auto run = [](unsigned jobs) {
    return parallel_reduce<std::vector<std::uint64_t>>(
        1000, jobs, [](std::uint64_t r, std::vector<std::uint64_t>& acc) { acc.push_back(r * r); },
        [](std::vector<std::uint64_t>& out, const std::vector<std::uint64_t>& a) {
          out.insert(out.end(), a.begin(), a.end());
        });
  };
  auto one = run(1);
  EXPECT_EQ(one.size(), 1000u);
  EXPECT_EQ(run(3), one);
  EXPECT_EQ(run(64), one);
  EXPECT_THROW(parallel_reduce<int>(
                   10, 2, [](std::uint64_t r, int&) { if (r == 7) throw std::runtime_error("boom"); },
                   [](int&, const int&) {}),
               std::runtime_error);
}
