#include "billiards/chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "billiards/error.hpp"
#include "billiards/exp_sums.hpp"

namespace billiards {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroMemory = 1e-14;
constexpr double kSlopeTol = 1e-9;

// Regime of the memory for the next stretch: its sign now, or the sign it
// is about to take when it sits at zero.
int regime(double ell, double v) {
  if (ell > 0.0) return 1;
  if (ell < 0.0) return -1;
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

struct Candidates {
  double up = 0.0;    // coefficient of |l(s)|
  double down = 0.0;
};

Candidates coefficients(const ChainSpec& spec, int site, int sigma) {
  Candidates k;
  if (site < spec.n) k.up = sigma > 0 ? spec.c[site] : spec.b[site];
  if (site > 0) k.down = sigma < 0 ? spec.c[site - 1] : spec.b[site - 1];
  return k;
}

// First time the hazard r (a + d s) integrates to e, or +inf when it cannot
// before |l| reaches zero.
double invert_linear_hazard(double r, double a, double d, double e) {
  if (r <= 0.0) return kInf;
  const double x = e / r;
  if (d > 0.0) return 2.0 * x / (a + std::sqrt(a * a + 2.0 * d * x));
  if (d == 0.0) return a > 0.0 ? x / a : kInf;
  const double mag = -d;
  if (x >= a * a / (2.0 * mag)) return kInf;
  return 2.0 * x / (a + std::sqrt(a * a - 2.0 * mag * x));
}

void validate_state(const ChainState& s, const ChainSpec& spec) {
  if (s.site < 0 || s.site > spec.n) throw InvalidInput("site outside 0..n");
  if (!std::isfinite(s.memory)) throw InvalidInput("memory must be finite");
}

}  // namespace

double ChainSpec::up_rate(int site, double ell) const {
  if (site >= n) return 0.0;
  return ell >= 0.0 ? c[site] * ell : b[site] * -ell;
}

double ChainSpec::down_rate(int site, double ell) const {
  if (site <= 0) return 0.0;
  return ell <= 0.0 ? c[site - 1] * -ell : b[site - 1] * ell;
}

BoundaryLayer hard_layer() { return derive_rates({1.0}); }

ChainSpec build_chain(int n, const BoundaryLayer& lower, const BoundaryLayer& upper,
                      ChainMode mode, std::optional<double> theta1) {
  ChainSpec s;
  s.n = n;
  s.N0 = static_cast<int>(lower.depth());
  s.N1 = static_cast<int>(upper.depth());
  s.mode = mode;
  if (n < 4 * std::max(s.N0, s.N1) + 4) {
    throw InvalidInput("n must be at least 4 * max(N0, N1) + 4");
  }
  if (mode == ChainMode::Noisy) {
    if (s.N0 != 1 || s.N1 != 1) throw InvalidInput("noisy mode needs one-site layers (N0 = N1 = 1)");
    if (!theta1) throw InvalidInput("noisy mode needs theta1");
  }
  if (theta1) {
    if (!(*theta1 >= 0.0) || !std::isfinite(*theta1)) throw InvalidInput("theta1 must be >= 0");
    if (mode == ChainMode::Noiseless && *theta1 != 0.0) {
      throw InvalidInput("theta1 is only meaningful in noisy mode");
    }
    s.theta1 = *theta1;
  }

  const double dn = static_cast<double>(n);
  s.v.assign(n + 1, 0.0);
  s.c.assign(n, dn);
  s.b.assign(n, 0.0);

  KahanSum lower_cum;
  for (int i = 0; i <= s.N0; ++i) {
    s.v[i] = lower.betas[i] * dn;
    lower_cum.add(lower.betas[i]);
    if (i < s.N0) s.c[i] = lower_cum.value() * dn;
  }
  KahanSum upper_cum;
  for (int i = 0; i <= s.N1; ++i) {
    s.v[n - i] = -upper.betas[i] * dn;
    upper_cum.add(upper.betas[i]);
    if (i < s.N1) s.c[n - i - 1] = upper_cum.value() * dn;
  }

  if (mode == ChainMode::Noisy) {
    const double bb = s.theta1 * dn;
    s.b[0] = bb;
    s.c[0] = s.v[0] + bb;
    s.b[n - 1] = bb;
    s.c[n - 1] = -s.v[n] + bb;
  }
  return s;
}

std::vector<double> lower_lambdas(const ChainSpec& spec) {
  std::vector<double> out;
  for (int i = 0; i <= spec.N0; ++i) out.push_back(spec.v[i] / spec.c[i]);
  return out;
}

std::vector<double> lower_mus(const ChainSpec& spec) {
  std::vector<double> out;
  for (int i = 0; i < spec.N0; ++i) out.push_back(spec.v[i + 1] / spec.c[i]);
  return out;
}

double check_master_balance(const ChainSpec& spec, const std::vector<double>& ell_grid) {
  double worst = 0.0;
  for (double ell : ell_grid) {
    for (int j = 0; j <= spec.n; ++j) {
      const double inflow = (j > 0 ? spec.up_rate(j - 1, ell) : 0.0) +
                            (j < spec.n ? spec.down_rate(j + 1, ell) : 0.0);
      const double outflow = spec.up_rate(j, ell) + spec.down_rate(j, ell);
      worst = std::max(worst, std::abs(spec.v[j] * ell + inflow - outflow));
    }
  }
  return worst;
}

NextEvent next_jump(const ChainState& state, const ChainSpec& spec, Stream& rng) {
  validate_state(state, spec);
  const double v = spec.v[state.site];
  const int sigma = regime(state.memory, v);
  if (sigma == 0) throw StuckState("zero memory on a site with zero drift");
  const double a = std::abs(state.memory);
  const double d = sigma * v;  // d|l|/ds
  const auto k = coefficients(spec, state.site, sigma);

  NextEvent ev;
  ev.wait = kInf;
  if (k.up > 0.0) {
    const double s = invert_linear_hazard(k.up, a, d, rng.exponential());
    if (s < ev.wait) {
      ev.wait = s;
      ev.destination = state.site + 1;
    }
  }
  if (k.down > 0.0) {
    const double s = invert_linear_hazard(k.down, a, d, rng.exponential());
    if (s < ev.wait) {
      ev.wait = s;
      ev.destination = state.site - 1;
    }
  }
  if (ev.wait == kInf) {
    if (d < 0.0) {
      ev.wait = a / -d;
      ev.sign_change_first = true;
      ev.destination = -1;
      return ev;
    }
    throw StuckState("no destination can ever fire from site " + std::to_string(state.site));
  }
  return ev;
}

NextEvent next_jump_thinning(const ChainState& state, const ChainSpec& spec, Stream& rng) {
  validate_state(state, spec);
  const double v = spec.v[state.site];
  const int sigma = regime(state.memory, v);
  if (sigma == 0) throw StuckState("zero memory on a site with zero drift");
  const double a = std::abs(state.memory);
  const double d = sigma * v;
  const auto k = coefficients(spec, state.site, sigma);
  const double total = k.up + k.down;
  if (total <= 0.0) {
    if (d < 0.0) return {a / -d, true, -1};
    throw StuckState("no destination can ever fire");
  }
  const double horizon = d < 0.0 ? a / -d : kInf;
  const double window = d > 0.0 ? std::max(a / d, 1.0 / std::sqrt(total * d)) : kInf;

  double s = 0.0;
  while (true) {
    const double end = std::min(s + window, horizon);
    const double bound = total * (d > 0.0 ? a + d * end : a);
    if (!(bound > 0.0)) {
      s = end;
      continue;
    }
    s += rng.exponential() / bound;
    if (s >= end) {
      if (end == horizon) return {horizon, true, -1};
      s = end;
      continue;
    }
    const double rate = total * (a + d * s);
    if (rng.uniform() * bound < rate) {
      const int dest = rng.uniform() * total < k.up ? state.site + 1 : state.site - 1;
      return {s, false, dest};
    }
  }
}

void apply_event(ChainState& state, const ChainSpec& spec, const NextEvent& ev) {
  const double v = spec.v[state.site];
  const int sigma = regime(state.memory, v);
  const double before = state.memory;
  state.clock += ev.wait;
  if (ev.sign_change_first) {
    state.memory = 0.0;
    return;
  }
  double ell = before + v * ev.wait;
  // Round-off near the zero crossing must not flip the regime.
  if (ell * sigma < 0.0 ||
      std::abs(ell) < kZeroMemory * (std::abs(before) + std::abs(v * ev.wait))) {
    ell = 0.0;
  }
  state.memory = ell;
  state.site = ev.destination;
}

ChainSummary simulate_chain(const ChainSpec& spec, const ChainState& init,
                            const ChainHorizon& horizon, Stream& rng,
                            const ChainRunOptions& options) {
  validate_state(init, spec);
  ChainSummary out{.occupancy = std::vector<double>(spec.n + 1, 0.0),
                   .memory = Histogram(options.memory_lo, options.memory_hi, options.memory_bins)};
  ChainState state = init;
  const double t_end = init.clock + horizon.max_time;
  double last_end_memory = init.memory;

  while (out.jumps < horizon.max_jumps && state.clock < t_end) {
    NextEvent ev = next_jump(state, spec, rng);
    bool truncated = false;
    if (state.clock + ev.wait > t_end) {
      ev.wait = t_end - state.clock;
      ev.sign_change_first = false;
      truncated = true;
    }
    const int site = state.site;
    const double v = spec.v[site];
    const double ell0 = state.memory;
    const double t0 = state.clock;
    if (ell0 != last_end_memory) ++out.continuity_violations;

    const int sigma = regime(ell0, v);
    if (truncated) {
      state.clock = t_end;
      state.memory = ell0 + v * ev.wait;
    } else {
      apply_event(state, spec, ev);
    }
    const double ell1 = state.memory;
    const double dt = ev.wait;
    const double expected = ell0 + v * dt;
    if (std::abs(ell1 - expected) > kSlopeTol * (1.0 + std::abs(ell0) + std::abs(v * dt))) {
      ++out.slope_violations;
    }
    out.occupancy[site] += dt;
    out.memory.add_uniform(ell0, ell1, dt);
    out.elapsed += dt;
    if (options.record_path) out.path.push_back({site, t0, t0 + dt, ell0, ell1});
    last_end_memory = ell1;

    if (truncated) break;
    if (ev.sign_change_first) {
      ++out.sign_changes;
    } else {
      ++out.jumps;
      if (spec.mode == ChainMode::Noiseless) {
        const int step = state.site - site;
        if ((sigma < 0 && step > 0) || (sigma > 0 && step < 0)) ++out.direction_violations;
      }
    }
  }
  out.final_state = state;
  return out;
}

PathCheck check_path(const ChainSpec& spec, const std::vector<PathSegment>& path) {
  PathCheck c;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& seg = path[i];
    const double dt = seg.t1 - seg.t0;
    const double drift = spec.v.at(static_cast<std::size_t>(seg.site)) * dt;
    if (!(dt >= 0.0) ||
        std::abs(seg.ell1 - seg.ell0 - drift) >
            kSlopeTol * (1.0 + std::abs(seg.ell0) + std::abs(drift))) {
      ++c.slope;
    }
    if (i > 0 && (seg.t0 != path[i - 1].t1 || seg.ell0 != path[i - 1].ell1)) ++c.continuity;
  }
  return c;
}

ExcursionResult boundary_excursion(const ChainSpec& spec, double entry_memory, Stream& rng) {
  if (!(entry_memory < 0.0) || !std::isfinite(entry_memory)) {
    throw InvalidInput("entry memory must be negative");
  }
  ChainState state{spec.N0, entry_memory, 0.0};
  ExcursionResult res;
  bool changed = false;
  for (std::uint64_t steps = 0; steps < 100000000ull; ++steps) {
    const NextEvent ev = next_jump(state, spec, rng);
    const int from = state.site;
    apply_event(state, spec, ev);
    if (!changed && state.memory >= 0.0) {
      // Memory reached zero at `from`, either exactly or within round-off
      // before the jump fired.
      changed = true;
      res.sign_change_level = from;
    }
    if (ev.sign_change_first) continue;
    if (changed && from == 1 && state.site == 0) ++res.returns_after_sign_change;
    if (from == spec.N0 && state.site == spec.N0 + 1) {
      if (!(state.memory > 0.0)) throw StuckState("left the layer without positive memory");
      res.exit_velocity = state.memory;
      res.excursion_duration = state.clock;
      return res;
    }
  }
  throw StuckState("excursion did not leave the layer");
}

}  // namespace billiards
