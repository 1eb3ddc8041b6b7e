#include <gtest/gtest.h>

#include <cmath>

#include "billiards/error.hpp"
#include "billiards/random.hpp"
#include "billiards/stats.hpp"

using namespace billiards;

TEST(Kolmogorov, KnownValues) {
  // Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2), evaluated in 30-digit arithmetic.
  EXPECT_NEAR(kolmogorov_q(1.0), 0.26999967167735456, 1e-9);
  EXPECT_NEAR(kolmogorov_q(1.36), 0.04948587675537788, 1e-9);
  EXPECT_NEAR(kolmogorov_q(0.5), 0.9639452436648751, 1e-9);
  EXPECT_NEAR(kolmogorov_q(0.0), 1.0, 1e-12);
  EXPECT_NEAR(kolmogorov_q(3.0), 3.0459959489425257e-08, 1e-12);
}

TEST(Kolmogorov, ContinuousAcrossBranch) {
  EXPECT_NEAR(kolmogorov_q(1.0 - 1e-12), kolmogorov_q(1.0), 1e-9);
}

TEST(KsTest, UniformSampleAccepted) {
  Stream rng(1, 0, "ks");
  std::vector<double> x(20000);
  for (auto& v : x) v = rng.uniform();
  EXPECT_GT(ks_test(x, cdf::uniform01).p_value, 0.001);
}

TEST(KsTest, ShiftedSampleRejected) {
  Stream rng(2, 0, "ks");
  std::vector<double> x(20000);
  for (auto& v : x) v = rng.normal() + 0.1;
  EXPECT_LT(ks_test(x, cdf::std_normal).p_value, 1e-6);
}

TEST(KsTest, TooFewSamples) {
  std::vector<double> x{0.1, 0.2};
  EXPECT_THROW(ks_test(x, cdf::uniform01), InvalidInput);
}

TEST(KsTwoSample, SameLawAcceptedOtherRejected) {
  Stream rng(3, 0, "ks2");
  std::vector<double> a(20000), b(20000), c(20000);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  for (auto& v : c) v = 1.1 * rng.normal();
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.001);
  EXPECT_LT(ks_two_sample(a, c).p_value, 0.001);
}

TEST(KsTwoSample, IdenticalSamplesHaveZeroDistance) {
  std::vector<double> a{1, 2, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, a).d, 0.0);
}

TEST(ChiSquare, HandComputedStatistic) {
  const std::vector<std::int64_t> counts{30, 50, 20};
  const std::vector<double> probs{0.25, 0.5, 0.25};
  const auto r = chi_square_test(counts, probs);
  // (30-25)^2/25 + 0 + (20-25)^2/25 = 2, two degrees of freedom.
  EXPECT_NEAR(r.statistic, 2.0, 1e-12);
  EXPECT_EQ(r.degrees_of_freedom, 2);
  EXPECT_NEAR(r.p_value, std::exp(-1.0), 1e-12);
}

TEST(ChiSquare, SmallCellsMerged) {
  const std::vector<std::int64_t> counts{500, 490, 6, 4};
  const std::vector<double> probs{0.5, 0.49, 0.006, 0.004};
  const auto r = chi_square_test(counts, probs);
  EXPECT_EQ(r.cells, 3);
}

TEST(Histogram, UniformSweepIsExact) {
  Histogram h(0.0, 1.0, 4);
  h.add_uniform(0.1, 0.6, 1.0);
  EXPECT_NEAR(h.weights()[0], 0.3, 1e-15);
  EXPECT_NEAR(h.weights()[1], 0.5, 1e-15);
  EXPECT_NEAR(h.weights()[2], 0.2, 1e-15);
  EXPECT_NEAR(h.weights()[3], 0.0, 1e-15);
  h.add_uniform(0.9, 1.4, 2.0);
  EXPECT_NEAR(h.weights()[3], 0.4, 1e-15);
  EXPECT_NEAR(h.overflow(), 1.6, 1e-15);
  EXPECT_NEAR(h.total(), 3.0, 1e-15);
}

TEST(Histogram, MergeAddsWeights) {
  Histogram a(0, 1, 2), b(0, 1, 2);
  a.add_point(0.2, 1.0);
  b.add_point(0.7, 2.0);
  a.merge(b);
  EXPECT_DOUBLE_EQ(a.weights()[0], 1.0);
  EXPECT_DOUBLE_EQ(a.weights()[1], 2.0);
  EXPECT_THROW(a.merge(Histogram(0, 2, 2)), InvalidInput);
}

TEST(KsDistance, UniformHistogramIsZero) {
  Histogram h(0.0, 1.0, 10);
  h.add_uniform(0.0, 1.0, 5.0);
  EXPECT_NEAR(ks_distance(h, cdf::uniform01), 0.0, 1e-15);
}

TEST(KsDistance, WeightedAtoms) {
  const WeightedSamples s({0.5, 0.25}, {1.0, 3.0});
  // Empirical CDF is 0.75 on [0.25, 0.5); the largest gap is 0.75 - 0.25.
  EXPECT_NEAR(ks_distance(s, cdf::uniform01), 0.5, 1e-15);
}

TEST(Integrate, Polynomials) {
  EXPECT_NEAR(integrate([](double x) { return x * x; }, 0, 3), 9.0, 1e-12);
  EXPECT_NEAR(integrate([](double x) { return std::exp(-x); }, 0, 40), 1.0 - std::exp(-40.0), 1e-12);
}

TEST(NumericCdf, MatchesClosedForm) {
  std::vector<double> pts{0.1, 0.5, 0.5, 1.0, 2.0, 3.5};
  const auto c = numeric_cdf_at([](double r) { return r * std::exp(-0.5 * r * r); }, 0.0, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(c[i], cdf::rayleigh(pts[i]), 1e-12);
  std::vector<double> bad{1.0, 0.5};
  EXPECT_THROW(numeric_cdf_at([](double) { return 1.0; }, 0.0, bad), InvalidInput);
}
