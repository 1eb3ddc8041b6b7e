#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "billiards/random.hpp"
#include "billiards/reflection.hpp"
#include "billiards/stats.hpp"

namespace billiards {

struct BilliardState {
  double x = 0.5;
  double ell = -1.0;
  double t = 0.0;
};

struct BilliardLaws {
  ReflectionLaw at_zero;
  ReflectionLaw at_one;
};

// Reflection instants u_j and the velocities R_j drawn there; the path is
// linear between them. end_time closes the last flight.
struct Trajectory {
  BilliardState initial;
  std::vector<double> times;
  std::vector<double> velocities;
  double end_time = 0.0;

  std::size_t reflections() const { return times.size(); }
};

// Flies to the endpoint ahead and draws the outgoing velocity there.
BilliardState next_reflection(const BilliardState& state, const BilliardLaws& laws, Stream& rng);

struct BilliardHorizon {
  std::uint64_t max_reflections = std::numeric_limits<std::uint64_t>::max();
  double max_time = std::numeric_limits<double>::infinity();
};

struct Marginals {
  Histogram x;            // position, exact per-flight uniform sweep
  WeightedSamples ell;    // velocity atoms weighted by flight duration
};

struct BilliardRun {
  Trajectory trajectory;
  Marginals marginals;
};

// Requires x in (0, 1) and ell != 0 at the start.
BilliardRun simulate_billiard(const BilliardState& init, const BilliardLaws& laws,
                              const BilliardHorizon& horizon, Stream& rng,
                              std::size_t bins = 64);

Marginals time_weighted_marginals(const Trajectory& traj, std::size_t bins);

struct TrajectoryCheck {
  std::uint64_t sign_alternation = 0;
  std::uint64_t non_increasing_times = 0;
  std::uint64_t flight_duration = 0;
  std::uint64_t position_range = 0;

  std::uint64_t total() const {
    return sign_alternation + non_increasing_times + flight_duration + position_range;
  }
};

TrajectoryCheck check_trajectory(const Trajectory& traj);

}  // namespace billiards
