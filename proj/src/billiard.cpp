#include "billiards/billiard.hpp"

#include <cmath>

#include "billiards/error.hpp"

namespace billiards {

namespace {

constexpr double kDurationTol = 1e-9;

void require_laws(const BilliardLaws& laws) {
  if (laws.at_zero.orientation != Endpoint::Zero || laws.at_one.orientation != Endpoint::One) {
    throw InvalidInput("reflection laws are attached to the wrong endpoints");
  }
}

// Position at the start of flight j (j = 0 is the initial flight).
double flight_start(const Trajectory& traj, std::size_t j) {
  if (j == 0) return traj.initial.x;
  return traj.velocities[j - 1] > 0.0 ? 0.0 : 1.0;
}

double flight_velocity(const Trajectory& traj, std::size_t j) {
  return j == 0 ? traj.initial.ell : traj.velocities[j - 1];
}

double flight_begin(const Trajectory& traj, std::size_t j) {
  return j == 0 ? traj.initial.t : traj.times[j - 1];
}

double flight_end(const Trajectory& traj, std::size_t j) {
  return j < traj.times.size() ? traj.times[j] : traj.end_time;
}

}  // namespace

BilliardState next_reflection(const BilliardState& state, const BilliardLaws& laws, Stream& rng) {
  require_laws(laws);
  if (state.ell == 0.0 || !std::isfinite(state.ell)) throw InvalidInput("velocity must be nonzero");
  if (!(state.x >= 0.0 && state.x <= 1.0)) throw InvalidInput("position outside [0, 1]");
  const double gap = state.ell < 0.0 ? state.x : 1.0 - state.x;
  if (gap == 0.0) throw InvalidInput("velocity points out of the interval");
  BilliardState next;
  next.t = state.t + gap / std::abs(state.ell);
  if (state.ell < 0.0) {
    next.x = 0.0;
    next.ell = sample_reflection(state.ell, laws.at_zero, rng);
  } else {
    next.x = 1.0;
    next.ell = sample_reflection(state.ell, laws.at_one, rng);
  }
  return next;
}

BilliardRun simulate_billiard(const BilliardState& init, const BilliardLaws& laws,
                              const BilliardHorizon& horizon, Stream& rng, std::size_t bins) {
  require_laws(laws);
  if (!(init.x > 0.0 && init.x < 1.0)) throw InvalidInput("initial position must lie in (0, 1)");
  if (init.ell == 0.0 || !std::isfinite(init.ell)) throw InvalidInput("initial velocity must be nonzero");

  Trajectory traj;
  traj.initial = init;
  const double t_end = init.t + horizon.max_time;
  BilliardState state = init;
  while (traj.times.size() < horizon.max_reflections) {
    BilliardState next = next_reflection(state, laws, rng);
    if (next.t > t_end) break;
    traj.times.push_back(next.t);
    traj.velocities.push_back(next.ell);
    state = next;
  }
  traj.end_time = std::isfinite(t_end) ? t_end : state.t;
  Marginals m = time_weighted_marginals(traj, bins);
  return {std::move(traj), std::move(m)};
}

Marginals time_weighted_marginals(const Trajectory& traj, std::size_t bins) {
  const std::size_t flights = traj.times.size() + 1;
  Histogram x(0.0, 1.0, bins);
  std::vector<double> values, weights;
  values.reserve(flights);
  weights.reserve(flights);
  for (std::size_t j = 0; j < flights; ++j) {
    const double dt = flight_end(traj, j) - flight_begin(traj, j);
    if (dt <= 0.0) continue;
    const double x0 = flight_start(traj, j);
    const double v = flight_velocity(traj, j);
    x.add_uniform(x0, x0 + v * dt, dt);
    values.push_back(v);
    weights.push_back(dt);
  }
  if (values.empty()) throw InvalidInput("trajectory has no elapsed time");
  return {std::move(x), WeightedSamples(std::move(values), std::move(weights))};
}

TrajectoryCheck check_trajectory(const Trajectory& traj) {
  TrajectoryCheck c;
  const std::size_t n = traj.times.size();
  double prev_t = traj.initial.t;
  for (std::size_t j = 0; j < n; ++j) {
    if (!(traj.times[j] > prev_t)) ++c.non_increasing_times;
    const double incoming = flight_velocity(traj, j);
    if (!(incoming * traj.velocities[j] < 0.0)) ++c.sign_alternation;
    // Landing point of flight j must be the endpoint the next flight leaves.
    const double x_end = flight_start(traj, j) + incoming * (traj.times[j] - prev_t);
    const double target = flight_start(traj, j + 1);
    // Differences of large clock values carry absolute round-off ~ ulp(t).
    const double tol = kDurationTol + 1e-14 * std::abs(incoming) * std::abs(traj.times[j]);
    if (!(x_end >= -tol && x_end <= 1.0 + tol) || std::abs(x_end - target) > tol) {
      ++c.position_range;
    }
    if (j > 0) {
      const double expected = 1.0 / std::abs(traj.velocities[j - 1]);
      if (std::abs(traj.times[j] - prev_t - expected) > kDurationTol * (1.0 + expected + traj.times[j])) {
        ++c.flight_duration;
      }
    }
    prev_t = traj.times[j];
  }
  if (!(traj.initial.x > 0.0 && traj.initial.x < 1.0)) ++c.position_range;
  return c;
}

}  // namespace billiards
