#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "billiards/chain.hpp"
#include "billiards/error.hpp"
#include "billiards/random.hpp"
#include "billiards/reflection.hpp"
#include "billiards/stats.hpp"

using namespace billiards;

TEST(BuildChain, RatesReproduceLayerRatios) {
  const auto layer = derive_rates({0.5, 0.3, 0.2});
  const auto spec = build_chain(100, layer, layer);
  const auto lam = lower_lambdas(spec);
  const auto mu = lower_mus(spec);
  for (std::size_t i = 0; i < lam.size(); ++i) EXPECT_NEAR(lam[i], layer.lambdas[i], 1e-15);
  for (std::size_t i = 0; i < mu.size(); ++i) EXPECT_NEAR(mu[i], layer.mus[i], 1e-15);
  EXPECT_DOUBLE_EQ(spec.v[100], -0.5 * 100);
  EXPECT_DOUBLE_EQ(spec.v[50], 0.0);
}

TEST(BuildChain, Preconditions) {
  const auto layer = derive_rates({0.4, 0.3, 0.2, 0.1});
  EXPECT_THROW(build_chain(15, layer, layer), InvalidInput);
  EXPECT_NO_THROW(build_chain(16, layer, layer));
  const auto one = derive_rates({0.6, 0.4});
  EXPECT_THROW(build_chain(16, one, one, ChainMode::Noisy), InvalidInput);
  EXPECT_THROW(build_chain(16, layer, layer, ChainMode::Noisy, 0.5), InvalidInput);
  EXPECT_THROW(build_chain(16, one, one, ChainMode::Noiseless, 0.5), InvalidInput);
  EXPECT_THROW(build_chain(16, one, one, ChainMode::Noisy, -1.0), InvalidInput);
}

TEST(MasterBalance, PropertyRandomLayers) {
  Stream rng(31, 0, "balance");
  const std::vector<double> grid{-3, -2, -1, -0.5, -0.1, 0.1, 0.5, 1, 2, 3};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> lo(1 + static_cast<int>(rng.uniform() * 5)), hi(1 + static_cast<int>(rng.uniform() * 5));
    for (auto& x : lo) x = 0.05 + rng.uniform();
    for (auto& x : hi) x = 0.05 + rng.uniform();
    std::sort(lo.begin(), lo.end(), std::greater<>());
    std::sort(hi.begin(), hi.end(), std::greater<>());
    const int n = 20 + static_cast<int>(rng.uniform() * 500);
    const auto spec = build_chain(n, derive_rates(lo), derive_rates(hi));
    EXPECT_LE(check_master_balance(spec, grid), 1e-10 * n);
  }
  const auto noisy = build_chain(64, derive_rates({0.6, 0.4}), derive_rates({0.7, 0.3}),
                                 ChainMode::Noisy, 1.3);
  EXPECT_LE(check_master_balance(noisy, grid), 1e-10 * 64);
}

TEST(NextJump, InversionAgreesWithThinning) {
  const auto layer = derive_rates({0.6, 0.3, 0.1});
  const auto spec = build_chain(20, layer, layer);
  // Memory negative at site 1 with positive drift: jumps race the sign change.
  const ChainState state{1, -0.04, 0.0};
  Stream ra(32, 0, "inversion"), rb(32, 0, "thinning");
  std::vector<double> wa, wb;
  int sign_a = 0, sign_b = 0;
  constexpr int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto ea = next_jump(state, spec, ra);
    const auto eb = next_jump_thinning(state, spec, rb);
    wa.push_back(ea.wait);
    wb.push_back(eb.wait);
    sign_a += ea.sign_change_first;
    sign_b += eb.sign_change_first;
  }
  EXPECT_GT(ks_two_sample(wa, wb).p_value, 0.001);
  const double pa = static_cast<double>(sign_a) / n, pb = static_cast<double>(sign_b) / n;
  EXPECT_NEAR(pa, pb, 5 * std::sqrt(2 * std::max(pa * (1 - pa), 1.0 / n) / n));
}

TEST(NextJump, SignChangeInstant) {
  const auto layer = derive_rates({0.7, 0.3});
  const auto spec = build_chain(16, layer, layer);
  // At the centre there is no drift; the memory only moves by jumping.
  Stream rng(33, 0, "sign");
  ChainState st{8, 0.3, 0.0};
  const auto ev = next_jump(st, spec, rng);
  EXPECT_FALSE(ev.sign_change_first);
  EXPECT_TRUE(ev.destination == 7 || ev.destination == 9);
  apply_event(st, spec, ev);
  EXPECT_DOUBLE_EQ(st.memory, 0.3);
  EXPECT_DOUBLE_EQ(st.clock, ev.wait);
}

TEST(ApplyEvent, SnapsToZeroAtSignChange) {
  const auto layer = derive_rates({0.7, 0.3});
  const auto spec = build_chain(16, layer, layer);
  ChainState st{0, -1.0, 0.0};
  NextEvent ev;
  ev.wait = 1.0 / spec.v[0];
  ev.sign_change_first = true;
  apply_event(st, spec, ev);
  EXPECT_EQ(st.memory, 0.0);
  EXPECT_EQ(st.site, 0);
}

TEST(SimulateChain, PathInvariantsHold) {
  const auto spec = build_chain(24, derive_rates({0.5, 0.3, 0.2}), derive_rates({0.7, 0.3}));
  Stream rng(34, 0, "path");
  ChainRunOptions ro;
  ro.record_path = true;
  ChainHorizon h;
  h.max_jumps = 200000;
  const auto run = simulate_chain(spec, {12, 0.4, 0.0}, h, rng, ro);
  EXPECT_EQ(run.violations(), 0u);
  EXPECT_EQ(check_path(spec, run.path).total(), 0u);
  EXPECT_EQ(run.jumps, 200000u);
  EXPECT_NEAR(std::accumulate(run.occupancy.begin(), run.occupancy.end(), 0.0), run.elapsed,
              1e-9 * run.elapsed);
}

TEST(SimulateChain, TimeHorizonStopsExactly) {
  const auto spec = build_chain(16, derive_rates({0.7, 0.3}), derive_rates({0.7, 0.3}));
  Stream rng(35, 0, "time");
  ChainHorizon h;
  h.max_time = 3.5;
  const auto run = simulate_chain(spec, {8, 1.0, 0.0}, h, rng);
  EXPECT_DOUBLE_EQ(run.elapsed, 3.5);
}

TEST(CheckPath, DetectsBrokenSegments) {
  const auto spec = build_chain(16, derive_rates({0.7, 0.3}), derive_rates({0.7, 0.3}));
  std::vector<PathSegment> path{{0, 0.0, 1.0, -1.0, -1.0 + spec.v[0]},
                                {1, 1.0, 2.0, 5.0, 5.0}};
  const auto c = check_path(spec, path);
  EXPECT_EQ(c.continuity, 1u);
  EXPECT_EQ(c.slope, 1u);
}

TEST(Excursion, HardBoundaryReflectsAtLevelZero) {
  const auto spec = build_chain(16, hard_layer(), hard_layer());
  Stream rng(36, 0, "hard");
  for (int i = 0; i < 100; ++i) {
    const auto ex = boundary_excursion(spec, -1.0, rng);
    EXPECT_EQ(ex.sign_change_level, 0);
    EXPECT_GT(ex.exit_velocity, 0.0);
  }
}

TEST(Excursion, LevelFrequenciesMatchClosedForm) {
  const auto layer = derive_rates({0.5, 0.3, 0.2});
  const auto spec = build_chain(100, layer, layer);
  Stream rng(37, 0, "levels");
  std::vector<std::int64_t> counts(3, 0);
  for (int i = 0; i < 30000; ++i) ++counts[boundary_excursion(spec, -1.0, rng).sign_change_level];
  EXPECT_GT(chi_square_test(counts, level_probabilities(-1.0, layer)).p_value, 0.001);
}

TEST(Excursion, RequiresNegativeEntry) {
  const auto spec = build_chain(16, hard_layer(), hard_layer());
  Stream rng(38, 0, "x");
  EXPECT_THROW(boundary_excursion(spec, 0.5, rng), InvalidInput);
}
