#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "billiards/error.hpp"
#include "billiards/exp_sums.hpp"
#include "billiards/random.hpp"
#include "billiards/reflection.hpp"
#include "billiards/stats.hpp"

using namespace billiards;

namespace {

BoundaryLayer random_layer(Stream& rng) {
  while (true) {
    const int depth = 1 + static_cast<int>(rng.uniform() * 6);
    std::vector<double> b(depth + 1);
    for (auto& x : b) x = 0.05 + rng.uniform();
    std::sort(b.begin(), b.end(), std::greater<>());
    try {
      auto layer = derive_rates(b);
      ExpSumSpec(layer.mus).require_distinct();
      ExpSumSpec(layer.lambdas).require_distinct();
      return layer;
    } catch (const DegenerateRates&) {
    }
  }
}

NoisyLawParams rates(double a, double b) {
  NoisyLawParams p;
  p.theta1 = 1.0;
  p.beta1_rate = a;
  p.beta2_rate = b;
  p.gamma0 = p.gamma1 = 1.0;
  p.gamma2 = 1.0;
  p.gamma3 = 0.5;
  return p;
}

}  // namespace

TEST(DeriveRates, ThreeLevelExample) {
  const auto l = derive_rates({0.5, 0.3, 0.2});
  ASSERT_EQ(l.depth(), 2u);
  EXPECT_DOUBLE_EQ(l.lambdas[0], 1.0);
  EXPECT_NEAR(l.lambdas[1], 0.375, 1e-15);
  EXPECT_NEAR(l.lambdas[2], 0.2, 1e-15);
  EXPECT_NEAR(l.mus[0], 0.6, 1e-15);
  EXPECT_NEAR(l.mus[1], 0.25, 1e-15);
}

TEST(DeriveRates, NormalizesAndValidates) {
  const auto l = derive_rates({2.0, 2.0});
  EXPECT_DOUBLE_EQ(l.betas[0], 0.5);
  EXPECT_THROW(derive_rates({0.3, 0.5}), InvalidInput);
  EXPECT_THROW(derive_rates({}), InvalidInput);
  EXPECT_THROW(derive_rates({0.5, 0.0}), InvalidInput);
}

TEST(LevelProbabilities, HardBoundaryIsLevelZero) {
  const auto p = level_probabilities(-1.3, derive_rates({1.0}));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
}

TEST(LevelProbabilities, TwoEqualBetasFrozen) {
  const auto p = level_probabilities(-1.0, derive_rates({1, 1, 1}));
  EXPECT_NEAR(p[0], 0.15481812174617549, 1e-13);
  EXPECT_NEAR(p[1], 0.47730243708238218, 1e-13);
  EXPECT_NEAR(p[2], 0.36787944117144233, 1e-13);
}

TEST(LevelProbabilities, EqualBetasAreBinomial) {
  for (int N : {1, 3, 5}) {
    const auto layer = derive_rates(std::vector<double>(N + 1, 1.0));
    const double ell = -0.8, q = std::exp(-0.5 * ell * ell);
    const auto p = level_probabilities(ell, layer);
    for (int k = 0; k <= N; ++k) {
      const double binom = std::tgamma(N + 1) / (std::tgamma(k + 1) * std::tgamma(N - k + 1)) *
                           std::pow(q, k) * std::pow(1 - q, N - k);
      EXPECT_NEAR(p[k], binom, 1e-12) << "N=" << N << " k=" << k;
    }
  }
}

TEST(LevelProbabilities, PropertySumAndDeepestLevel) {
  Stream rng(21, 0, "levels");
  for (int trial = 0; trial < 200; ++trial) {
    const auto layer = random_layer(rng);
    const double ell = -(0.05 + 4.0 * rng.uniform());
    const auto p = level_probabilities(ell, layer);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double x : p) EXPECT_GE(x, 0.0);
    EXPECT_NEAR(p.back(), std::exp(-ell * ell / (2 * layer.mus.back())), 1e-13);
  }
}

TEST(LevelProbabilities, RejectsNonNegativeEll) {
  EXPECT_THROW(level_probabilities(0.5, derive_rates({0.6, 0.4})), InvalidInput);
}

TEST(ExitSpeed, DensityIntegratesAndCdfAgrees) {
  Stream rng(22, 0, "exit");
  for (int trial = 0; trial < 20; ++trial) {
    const auto layer = random_layer(rng);
    for (std::size_t k = 0; k <= layer.depth(); ++k) {
      const Density f = [&](double r) { return exit_speed_density(k, layer.lambdas, r); };
      EXPECT_NEAR(integrate(f, 0, 30), 1.0, 1e-9);
      EXPECT_NEAR(integrate(f, 0, 1.2), exit_speed_cdf(k, layer.lambdas, 1.2), 1e-10);
    }
  }
}

TEST(ExitSpeed, LastLevelIsScaledRayleigh) {
  const auto layer = derive_rates({0.5, 0.3, 0.2});
  const double lam = layer.lambdas.back();
  for (double r : {0.3, 1.0, 2.0}) {
    EXPECT_NEAR(exit_speed_density(2, layer.lambdas, r), r / lam * std::exp(-r * r / (2 * lam)),
                1e-14);
  }
}

TEST(InfiniteLayer, GeometricSequencesAndTails) {
  const double r = 0.5;
  const auto inf = InfiniteLayer::geometric(r);
  EXPECT_NEAR(inf.lambdas.term(0), 1.0, 1e-15);
  double sum = 0;
  for (std::size_t j = 0; j <= 60; ++j) sum += inf.mus.term(j);
  EXPECT_LE(sum - [&] {
    double s = 0;
    for (std::size_t j = 0; j <= 5; ++j) s += inf.mus.term(j);
    return s;
  }(), inf.mus.tail_after(5) * (1 + 1e-12));
}

TEST(TruncatedLevels, MatchesFiniteLayerAndSumsToOne) {
  const auto inf = InfiniteLayer::geometric(0.4);
  const auto t = level_probabilities_truncated(-1.0, inf.mus, 1e-10);
  EXPECT_NEAR(std::accumulate(t.probs.begin(), t.probs.end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(t.probs.size(), t.cutoff + 2);
}

TEST(TruncatedLevels, CapEnforced) {
  const auto inf = InfiniteLayer::geometric(0.999);
  EXPECT_THROW(level_probabilities_truncated(-1.0, inf.mus, 1e-12, 5), TruncationFailure);
}

TEST(NoisyP1, EqualRatesClosedForm) {
  for (double b : {0.5, 1.0, 2.0}) {
    for (double ell : {-0.3, -1.0, -2.0}) {
      EXPECT_NEAR(noisy_sign_change_prob(ell, rates(b, b)), 0.5 * (1 + std::exp(-b * ell * ell)),
                  1e-12);
    }
  }
}

TEST(NoisyP1, UnequalRatesFrozen) {
  EXPECT_NEAR(noisy_sign_change_prob(-1.0, rates(1.0, 2.5)), 0.7639354124144129, 1e-13);
  EXPECT_NEAR(noisy_sign_change_prob(-1.0, rates(2.5, 1.0)), 0.4098385310360322, 1e-13);
}

// The sign change happens at site 1 exactly when an alternating two-state
// clock (rate a, then rate b, ...) started in its first state is back in
// that state at time t.
TEST(NoisyP1, PropertyMatchesTwoStateClock) {
  Stream rng(26, 0, "two-state");
  for (int trial = 0; trial < 300; ++trial) {
    const double a = 0.05 + 5 * rng.uniform(), b = 0.05 + 5 * rng.uniform();
    const double ell = -(0.05 + 3 * rng.uniform());
    const double t = 0.5 * ell * ell;
    const double oracle = (b + a * std::exp(-(a + b) * t)) / (a + b);
    EXPECT_NEAR(noisy_sign_change_prob(ell, rates(a, b)), oracle, 1e-12) << a << " " << b << " " << t;
  }
}

TEST(NoisyP1, ContinuityAtEqualRatesFrozen) {
  const double base = noisy_sign_change_prob(-1.0, rates(1.0, 1.0));
  EXPECT_NEAR(noisy_sign_change_prob(-1.0, rates(1.0, 1.0 + 1e-4)) - base, 6.605927565868293e-6, 1e-15);
  for (double gap : {1e-5, 1e-6, 1e-7}) {
    EXPECT_LT(std::abs(noisy_sign_change_prob(-1.0, rates(1.0, 1.0 + gap)) - base), 1e-6);
  }
}

TEST(NoisyP1, NoCounterFlowIsExponential) {
  const auto p = NoisyLawParams::from_layer(0.7, 0.3, 0.0);
  EXPECT_DOUBLE_EQ(p.beta2_rate, 0.0);
  EXPECT_NEAR(noisy_sign_change_prob(-1.2, p), std::exp(-p.beta1_rate * 0.72), 1e-15);
}

TEST(NoisyTerm, RoutesAgreeWhereClosedFormIsStable) {
  using detail::NoisyRoute;
  for (std::size_t k = 1; k <= 4; ++k) {
    for (auto [a, b] : {std::pair{1.0, 2.5}, std::pair{2.5, 1.0}, std::pair{0.7, 0.3}}) {
      const double closed = detail::noisy_term(k, a, b, 0.5, NoisyRoute::ClosedForm);
      const double unif = detail::noisy_term(k, a, b, 0.5, NoisyRoute::Uniformized);
      EXPECT_NEAR(closed, unif, 1e-13 + 1e-10 * unif) << "k=" << k;
    }
  }
}

TEST(NoisyParams, FromLayerValues) {
  const auto p = NoisyLawParams::from_layer(0.6, 0.4, 0.5);
  EXPECT_NEAR(p.beta1_rate, 1.1 / 0.4, 1e-14);
  EXPECT_NEAR(p.beta2_rate, 0.5 / 0.6, 1e-14);
  EXPECT_NEAR(p.gamma0, 1.2 / 1.1, 1e-14);
  EXPECT_NEAR(p.gamma1, 0.8 / 1.5, 1e-14);
  EXPECT_NEAR(p.gamma3, 1 / 1.5, 1e-14);
  EXPECT_NO_THROW(p.validate());
  NoisyLawParams bad = p;
  bad.gamma2.reset();
  EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(SampleReflection, PropertyOppositeSign) {
  Stream rng(23, 0, "sign");
  const ReflectionLaw laws[] = {
      ReflectionLaw::rayleigh(Endpoint::Zero), ReflectionLaw::finite(derive_rates({0.5, 0.3, 0.2}), Endpoint::Zero),
      ReflectionLaw{Noisy{NoisyLawParams::from_layer(0.6, 0.4, 0.5)}, Endpoint::Zero},
      ReflectionLaw{NoiselessTruncatedInfinite{InfiniteLayer::geometric(0.5), 1e-8}, Endpoint::Zero}};
  for (const auto& law : laws) {
    for (int i = 0; i < 2000; ++i) {
      const double ell = (rng.uniform() < 0.5 ? -1 : 1) * (0.01 + 3 * rng.uniform());
      const double out = sample_reflection(ell, law, rng);
      ASSERT_TRUE(std::isfinite(out));
      ASSERT_LT(out * ell, 0.0);
    }
  }
}

TEST(SampleReflection, FiniteLawMatchesMixtureCdf) {
  Stream rng(24, 0, "mixture");
  const auto layer = derive_rates({0.5, 0.3, 0.2});
  const auto law = ReflectionLaw::finite(layer, Endpoint::Zero);
  const auto p = level_probabilities(-0.9, layer);
  std::vector<double> x(50000);
  for (auto& v : x) v = sample_reflection(-0.9, law, rng);
  const auto mix = [&](double r) {
    if (r <= 0) return 0.0;
    double c = 0;
    for (std::size_t k = 0; k < p.size(); ++k) c += p[k] * exit_speed_cdf(k, layer.lambdas, r);
    return c;
  };
  EXPECT_GT(ks_test(x, mix).p_value, 0.001);
}

TEST(SampleReflection, NoisyLevelFrequency) {
  Stream rng(25, 0, "noisy");
  const auto params = NoisyLawParams::from_layer(0.6, 0.4, 0.7);
  const double p1 = noisy_sign_change_prob(-1.0, params);
  // Mean of the squared speed: one gamma1 term, (visits - 1) pairs, and an
  // extra gamma0 term unless the sign changed at site 1.
  double s = 0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = sample_reflection_noisy(-1.0, params, rng);
    s += v * v;
  }
  const double g2 = *params.gamma2;
  const double visits = 1.0 / params.gamma3;
  const double mean_s = params.gamma1 + (visits - 1) * (params.gamma0 + g2);
  const double expect = mean_s + (1 - p1) * params.gamma0;
  EXPECT_NEAR(s / n, expect, 0.02 * expect);
}
