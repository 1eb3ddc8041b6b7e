#include <gtest/gtest.h>

#include <cmath>

#include "billiards/billiard.hpp"
#include "billiards/error.hpp"
#include "billiards/random.hpp"
#include "billiards/stats.hpp"

using namespace billiards;

namespace {

BilliardLaws rayleigh_both() {
  return {ReflectionLaw::rayleigh(Endpoint::Zero), ReflectionLaw::rayleigh(Endpoint::One)};
}

}  // namespace

TEST(NextReflection, FliesToTheEndpointAhead) {
  Stream rng(41, 0, "next");
  const auto s = next_reflection({0.25, -0.5, 1.0}, rayleigh_both(), rng);
  EXPECT_DOUBLE_EQ(s.x, 0.0);
  EXPECT_DOUBLE_EQ(s.t, 1.5);
  EXPECT_GT(s.ell, 0.0);
  const auto u = next_reflection({0.25, 0.5, 0.0}, rayleigh_both(), rng);
  EXPECT_DOUBLE_EQ(u.x, 1.0);
  EXPECT_DOUBLE_EQ(u.t, 1.5);
  EXPECT_LT(u.ell, 0.0);
}

TEST(BilliardLaws, OrientationChecked) {
  const BilliardLaws swapped{ReflectionLaw::rayleigh(Endpoint::One),
                             ReflectionLaw::rayleigh(Endpoint::Zero)};
  Stream rng(42, 0, "o");
  BilliardHorizon h;
  h.max_reflections = 10;
  EXPECT_THROW(simulate_billiard({0.5, -1.0, 0.0}, swapped, h, rng), InvalidInput);
}

TEST(SimulateBilliard, RejectsBadStart) {
  Stream rng(43, 0, "s");
  BilliardHorizon h;
  h.max_reflections = 10;
  EXPECT_THROW(simulate_billiard({0.0, -1.0, 0.0}, rayleigh_both(), h, rng), InvalidInput);
  EXPECT_THROW(simulate_billiard({0.5, 0.0, 0.0}, rayleigh_both(), h, rng), InvalidInput);
}

TEST(SimulateBilliard, PropertyTrajectoriesAreWellFormed) {
  Stream rng(44, 0, "traj");
  const BilliardLaws mixes[] = {
      rayleigh_both(),
      {ReflectionLaw::finite(derive_rates({0.5, 0.3, 0.2}), Endpoint::Zero),
       ReflectionLaw{Noisy{NoisyLawParams::from_layer(0.6, 0.4, 0.8)}, Endpoint::One}},
      {ReflectionLaw{NoiselessTruncatedInfinite{InfiniteLayer::geometric(0.3), 1e-8}, Endpoint::Zero},
       ReflectionLaw::finite(derive_rates({0.7, 0.3}), Endpoint::One)}};
  for (const auto& laws : mixes) {
    for (int trial = 0; trial < 5; ++trial) {
      BilliardHorizon h;
      h.max_reflections = 5000;
      const BilliardState init{0.01 + 0.98 * rng.uniform(), (rng.uniform() - 0.5) * 4 + 1e-3, 0.0};
      const auto run = simulate_billiard(init, laws, h, rng);
      EXPECT_EQ(run.trajectory.reflections(), 5000u);
      EXPECT_EQ(check_trajectory(run.trajectory).total(), 0u);
    }
  }
}

TEST(CheckTrajectory, DetectsSameSignVelocities) {
  Trajectory t;
  t.initial = {0.5, -1.0, 0.0};
  t.times = {0.5, 1.5};
  t.velocities = {1.0, 1.0};
  t.end_time = 2.0;
  EXPECT_GT(check_trajectory(t).sign_alternation, 0u);
}

TEST(Marginals, TimeWeightsSumToElapsed) {
  Stream rng(45, 0, "m");
  BilliardHorizon h;
  h.max_reflections = 1000;
  const auto run = simulate_billiard({0.5, -1.0, 0.0}, rayleigh_both(), h, rng, 16);
  const double elapsed = run.trajectory.end_time - run.trajectory.initial.t;
  EXPECT_NEAR(run.marginals.x.total(), elapsed, 1e-9 * elapsed);
  EXPECT_NEAR(run.marginals.ell.total(), elapsed, 1e-9 * elapsed);
  const auto again = time_weighted_marginals(run.trajectory, 16);
  EXPECT_EQ(again.x.weights(), run.marginals.x.weights());
}

TEST(SimulateBilliard, RayleighIsStationaryForUniformGaussian) {
  Stream rng(46, 0, "stat");
  BilliardHorizon h;
  h.max_reflections = 200000;
  const auto run = simulate_billiard({0.5, -1.0, 0.0}, rayleigh_both(), h, rng, 50);
  EXPECT_LT(ks_distance(run.marginals.x, cdf::uniform01), 0.01);
  EXPECT_LT(ks_distance(run.marginals.ell, cdf::std_normal), 0.02);
}
