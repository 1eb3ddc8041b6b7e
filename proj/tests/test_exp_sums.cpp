#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/gamma.hpp>

#include "billiards/error.hpp"
#include "billiards/exp_sums.hpp"
#include "billiards/random.hpp"
#include "billiards/stats.hpp"

using namespace billiards;

namespace {

// Random distinct means in [0.05, 2].
ExpSumSpec random_spec(Stream& rng, int max_terms) {
  while (true) {
    const int m = 1 + static_cast<int>(rng.uniform() * max_terms);
    std::vector<double> means(m);
    for (auto& x : means) x = 0.05 + 1.95 * rng.uniform();
    ExpSumSpec spec(means);
    try {
      spec.require_distinct();
      return spec;
    } catch (const DegenerateRates&) {
    }
  }
}

}  // namespace

TEST(Hypoexp, TwoTermsMatchElementaryForm) {
  const double a = 0.7, b = 0.2;
  const ExpSumSpec spec({a, b});
  for (double u : {0.0, 0.1, 0.5, 1.3, 4.0}) {
    const double f = (std::exp(-u / a) - std::exp(-u / b)) / (a - b);
    EXPECT_NEAR(hypoexp_density(spec, u), f, 1e-14);
    const double tail = (a * std::exp(-u / a) - b * std::exp(-u / b)) / (a - b);
    EXPECT_NEAR(hypoexp_tail(spec, u), tail, 1e-14);
  }
}

TEST(Hypoexp, SingleTermIsExponential) {
  const ExpSumSpec spec({0.4});
  EXPECT_NEAR(hypoexp_density(spec, 1.0), std::exp(-2.5) / 0.4, 1e-15);
  EXPECT_NEAR(hypoexp_tail(spec, 1.0), std::exp(-2.5), 1e-15);
}

TEST(Hypoexp, NearEqualMeansRejected) {
  EXPECT_THROW(ExpSumSpec({1.0, 1.0 + 1e-9}).require_distinct(), DegenerateRates);
  EXPECT_THROW(hypoexp_density(ExpSumSpec({0.5, 0.5}), 1.0), DegenerateRates);
  EXPECT_THROW(ExpSumSpec({1.0, -1.0}).validate(), InvalidInput);
}

TEST(Hypoexp, PropertyIntegratesToOneAndMatchesTail) {
  Stream rng(11, 0, "hypoexp-property");
  for (int trial = 0; trial < 30; ++trial) {
    const auto spec = random_spec(rng, 7);
    const Density f = [&](double u) { return hypoexp_density(spec, u); };
    const double hi = tail_cutoff(spec, 1e-15);
    EXPECT_NEAR(integrate(f, 0.0, hi), 1.0, 1e-9);
    const double t = 0.3 * hi * rng.uniform();
    EXPECT_NEAR(integrate(f, 0.0, t), 1.0 - hypoexp_tail(spec, t), 1e-9);
  }
}

TEST(Hypoexp, PropertyTailCutoffBoundsTail) {
  Stream rng(12, 0, "cutoff-property");
  for (int trial = 0; trial < 50; ++trial) {
    const auto spec = random_spec(rng, 6);
    for (double eps : {1e-3, 1e-8, 1e-12}) {
      EXPECT_LE(hypoexp_tail(spec, tail_cutoff(spec, eps)), eps * (1 + 1e-6));
    }
  }
}

TEST(MixedDensity, RepeatedMeanIsGamma) {
  const boost::math::gamma_distribution<double> g(3.0, 0.6);
  for (double u : {0.2, 1.0, 3.0}) {
    EXPECT_NEAR(mixed_density(ExpSumSpec({0.6}, {3}), u), boost::math::pdf(g, u), 1e-14);
  }
}

TEST(MixedDensity, ReducesToHypoexp) {
  const ExpSumSpec spec({0.9, 0.4, 0.15});
  for (double u : {0.1, 0.8, 2.5}) {
    EXPECT_NEAR(mixed_density(spec, u), hypoexp_density(spec, u), 1e-13);
  }
}

TEST(MixedDensity, IntegratesToOne) {
  const ExpSumSpec spec({0.9, 0.3}, {2, 3});
  const Density f = [&](double u) { return mixed_density(spec, u); };
  EXPECT_NEAR(integrate(f, 0.0, tail_cutoff(spec, 1e-16)), 1.0, 1e-10);
}

TEST(PartialFractions, PropertyIdentityHolds) {
  Stream rng(13, 0, "pf-property");
  for (int trial = 0; trial < 100; ++trial) {
    auto spec = random_spec(rng, 8);
    while (spec.means.size() < 2) spec = random_spec(rng, 8);
    const double z0 = -rng.uniform();
    EXPECT_LT(partial_fraction_check(spec.means, z0), 1e-8);
  }
}

TEST(SampleExpSum, MatchesTailByKs) {
  Stream rng(14, 0, "sample");
  const ExpSumSpec spec({1.0, 0.375, 0.2});
  std::vector<double> x(50000);
  for (auto& v : x) v = sample_exp_sum(spec, rng);
  const auto ks = ks_test(x, [&](double u) { return u <= 0 ? 0.0 : 1.0 - hypoexp_tail(spec, u); });
  EXPECT_GT(ks.p_value, 0.001);
}

TEST(KahanSum, RecoversSmallTerms) {
  KahanSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1000.0);
}
