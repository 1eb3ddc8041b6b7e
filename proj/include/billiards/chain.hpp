#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "billiards/random.hpp"
#include "billiards/reflection.hpp"
#include "billiards/stats.hpp"

namespace billiards {

enum class ChainMode { Noiseless, Noisy };

// Sites 0..n; edge e joins sites e and e+1. On edge e the flow-aligned rate
// is c[e] |l| (up when l >= 0, down when l <= 0) and the counter-flow rate
// is b[e] |l|.
struct ChainSpec {
  int n = 0;
  int N0 = 0;
  int N1 = 0;
  ChainMode mode = ChainMode::Noiseless;
  double theta1 = 0.0;
  std::vector<double> v;  // n + 1 sites
  std::vector<double> c;  // n edges
  std::vector<double> b;  // n edges

  double up_rate(int site, double ell) const;
  double down_rate(int site, double ell) const;
};

// Single-site layer, i.e. a hard boundary.
BoundaryLayer hard_layer();

ChainSpec build_chain(int n, const BoundaryLayer& lower, const BoundaryLayer& upper,
                      ChainMode mode = ChainMode::Noiseless,
                      std::optional<double> theta1 = std::nullopt);

// lambda_i(n) = v_i / c_i and mu_i(n) = v_{i+1} / c_i on the lower layer.
std::vector<double> lower_lambdas(const ChainSpec& spec);
std::vector<double> lower_mus(const ChainSpec& spec);

// max_{j, l} |v_j l + inflow_j(l) - outflow_j(l)|.
double check_master_balance(const ChainSpec& spec, const std::vector<double>& ell_grid);

struct ChainState {
  int site = 0;
  double memory = 0.0;
  double clock = 0.0;
};

struct NextEvent {
  double wait = 0.0;
  bool sign_change_first = false;  // memory reaches 0 before any jump
  int destination = -1;            // valid when !sign_change_first
};

NextEvent next_jump(const ChainState& state, const ChainSpec& spec, Stream& rng);

// Same law by thinning a dominating Poisson clock. Slow; used to
// cross-check the closed-form inversion.
NextEvent next_jump_thinning(const ChainState& state, const ChainSpec& spec, Stream& rng);

// Moves `state` through `ev`, snapping memory to zero at a sign change.
void apply_event(ChainState& state, const ChainSpec& spec, const NextEvent& ev);

struct ChainHorizon {
  std::uint64_t max_jumps = std::numeric_limits<std::uint64_t>::max();
  double max_time = std::numeric_limits<double>::infinity();
};

struct PathSegment {
  int site;
  double t0, t1;
  double ell0, ell1;
};

struct ChainRunOptions {
  double memory_lo = -5.0;
  double memory_hi = 5.0;
  std::size_t memory_bins = 200;
  bool record_path = false;
};

struct ChainSummary {
  std::vector<double> occupancy;  // time per site
  Histogram memory;
  double elapsed = 0.0;
  std::uint64_t jumps = 0;
  std::uint64_t sign_changes = 0;
  ChainState final_state{};
  std::uint64_t slope_violations = 0;
  std::uint64_t continuity_violations = 0;
  std::uint64_t direction_violations = 0;
  std::vector<PathSegment> path{};

  std::uint64_t violations() const {
    return slope_violations + continuity_violations + direction_violations;
  }
};

ChainSummary simulate_chain(const ChainSpec& spec, const ChainState& init,
                            const ChainHorizon& horizon, Stream& rng,
                            const ChainRunOptions& options = {});

struct PathCheck {
  std::uint64_t continuity = 0;  // a segment does not start where the last ended
  std::uint64_t slope = 0;       // memory slope differs from v at the site

  std::uint64_t total() const { return continuity + slope; }
};

PathCheck check_path(const ChainSpec& spec, const std::vector<PathSegment>& path);

struct ExcursionResult {
  int sign_change_level = 0;
  double exit_velocity = 0.0;
  double excursion_duration = 0.0;
  // Jumps from site 1 down to site 0 while the memory is positive.
  int returns_after_sign_change = 0;
};

// Starts at site N0 with memory entry_memory < 0 and runs until the first
// jump out of the lower layer.
ExcursionResult boundary_excursion(const ChainSpec& spec, double entry_memory, Stream& rng);

}  // namespace billiards
