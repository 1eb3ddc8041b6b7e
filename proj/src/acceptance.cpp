#include "billiards/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <boost/math/special_functions/binomial.hpp>

#include "billiards/billiard.hpp"
#include "billiards/chain.hpp"
#include "billiards/error.hpp"
#include "billiards/exp_sums.hpp"
#include "billiards/reflection.hpp"
#include "billiards/stats.hpp"

namespace billiards {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Stream stream_for(const AcceptanceOptions& opt, int id, std::string_view what = "main") {
  return Stream(opt.seed, static_cast<std::uint64_t>(id),
                "acceptance/" + std::to_string(id) + "/" + std::string(what));
}

CriterionResult titled(int id, std::string title) {
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  return r;
}

double tol_of(const AcceptanceOptions& opt) { return opt.tol.value_or(1e-10); }
double dthr_of(const AcceptanceOptions& opt) { return opt.d_threshold.value_or(0.02); }

// Level at which a descent through mu_0..mu_{N-1} reverses, from direct
// simulation of the exponential race against t = ell^2 / 2.
int race_level(const std::vector<double>& mus, double t, Stream& rng) {
  double z = 0.0;
  for (std::size_t m = mus.size(); m >= 1; --m) {
    z += mus[m - 1] * rng.exponential();
    if (z >= t) return static_cast<int>(m);
  }
  return 0;
}

// |observed frequency - p| in binomial standard errors; the variance is
// floored at 1/trials so that levels with negligible mass do not blow up.
double binomial_z(std::int64_t count, std::int64_t trials, double p) {
  const double n = static_cast<double>(trials);
  const double var = std::max(p * (1.0 - p), 1.0 / n);
  return std::abs(static_cast<double>(count) / n - p) / std::sqrt(var / n);
}

BoundaryLayer random_layer(Stream& rng, int max_depth) {
  while (true) {
    const int depth = 1 + static_cast<int>(rng.uniform() * max_depth);
    std::vector<double> b(depth + 1);
    for (auto& x : b) x = 0.05 + 0.95 * rng.uniform();
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

// Two-step ks for a sample whose reference CDF is only known numerically.
KsResult ks_against_values(const std::vector<double>& sorted, const std::vector<double>& cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    d = std::max({d, cdf[i] - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf[i]});
  }
  return {d, kolmogorov_q(std::sqrt(n) * d)};
}

CriterionResult rayleigh_reflection(const AcceptanceOptions& opt, ViolationTally&) {
  CriterionResult r = titled(1, "Rayleigh reflection at a hard boundary");
  const auto t0 = Clock::now();
  Stream rng = stream_for(opt, 1);
  const auto law = ReflectionLaw::rayleigh(Endpoint::Zero);
  constexpr int kDraws = 100000;
  std::vector<double> draws(kDraws);
  for (auto& d : draws) d = sample_reflection(-1.0, law, rng);
  const auto ks = ks_test(draws, cdf::rayleigh);
  r.metrics.push_back({"ks_d_sqrt_n", ks.d * std::sqrt(static_cast<double>(kDraws)), 1.95});
  r.metrics.push_back({"seconds", seconds_since(t0), 1.0, Compare::Less});
  return r;
}

CriterionResult binomial_levels(const AcceptanceOptions& opt, ViolationTally&) {
  CriterionResult r = titled(2, "Binomial level law, N = 3 with equal betas");
  const auto t0 = Clock::now();
  const auto layer = derive_rates({0.25, 0.25, 0.25, 0.25});
  const double ell = -1.0;
  const double q = std::exp(-0.5);
  const auto p = level_probabilities(ell, layer);
  double worst = 0.0;
  std::vector<double> binom(4);
  for (int k = 0; k <= 3; ++k) {
    binom[k] = boost::math::binomial_coefficient<double>(3, k) * std::pow(q, k) *
               std::pow(1.0 - q, 3 - k);
    worst = std::max(worst, std::abs(p[k] - binom[k]));
  }
  r.metrics.push_back({"max_abs_diff_closed_form", worst, tol_of(opt)});

  const auto spec = build_chain(10000, layer, layer);
  Stream rng = stream_for(opt, 2);
  std::vector<std::int64_t> counts(4, 0);
  for (int i = 0; i < 100000; ++i) ++counts[boundary_excursion(spec, ell, rng).sign_change_level];
  const auto chi = chi_square_test(counts, binom);
  r.metrics.push_back({"chi_square_p", chi.p_value, 0.001, Compare::Greater});
  r.metrics.push_back({"seconds", seconds_since(t0), 30.0, Compare::Less});
  return r;
}

CriterionResult level_oracle(const AcceptanceOptions& opt, ViolationTally&) {
  CriterionResult r = titled(3, "Level probabilities against the exponential race");
  Stream rng = stream_for(opt, 3);
  constexpr int kLayers = 20;
  constexpr int kTrials = 100000;
  double worst_z = 0.0;
  double worst_sum = 0.0;
  for (int l = 0; l < kLayers; ++l) {
    const auto layer = random_layer(rng, 6);
    const double ell = -(0.2 + 2.8 * rng.uniform());
    const auto p = level_probabilities(ell, layer);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
    std::vector<std::int64_t> counts(p.size(), 0);
    const double t = 0.5 * ell * ell;
    for (int i = 0; i < kTrials; ++i) ++counts[race_level(layer.mus, t, rng)];
    for (std::size_t k = 0; k < p.size(); ++k) {
      worst_z = std::max(worst_z, binomial_z(counts[k], kTrials, p[k]));
    }
  }
  r.metrics.push_back({"max_level_z", worst_z, 4.0});
  r.metrics.push_back({"max_abs_sum_minus_one", worst_sum, 1e-9});
  return r;
}

CriterionResult exit_speed(const AcceptanceOptions& opt, ViolationTally&) {
  CriterionResult r = titled(4, "Conditional exit-speed densities");
  Stream rng = stream_for(opt, 4);
  BoundaryLayer layer = random_layer(rng, 6);
  while (layer.depth() < 3) layer = random_layer(rng, 6);
  double worst_norm = 0.0;
  double min_p = 1.0;
  for (std::size_t k = 0; k <= layer.depth(); ++k) {
    const std::vector<double> tail(layer.lambdas.begin() + static_cast<std::ptrdiff_t>(k),
                                   layer.lambdas.end());
    const Density f = [&](double x) { return exit_speed_density(k, layer.lambdas, x); };
    const double r_max = std::sqrt(2.0 * tail_cutoff(ExpSumSpec(tail), 1e-14));
    worst_norm = std::max(worst_norm, std::abs(integrate(f, 0.0, r_max) - 1.0));

    std::vector<double> draws(100000);
    for (auto& d : draws) {
      double s = 0.0;
      for (double lam : tail) s += lam * rng.exponential();
      d = std::sqrt(2.0 * s);
    }
    std::sort(draws.begin(), draws.end());
    const auto cdf = numeric_cdf_at(f, 0.0, draws);
    min_p = std::min(min_p, ks_against_values(draws, cdf).p_value);
  }
  r.metrics.push_back({"max_abs_integral_minus_one", worst_norm, 1e-8});
  r.metrics.push_back({"min_ks_p", min_p, 0.001, Compare::Greater});
  return r;
}

CriterionResult chain_limit_exact(const AcceptanceOptions& opt, ViolationTally&) {
  CriterionResult r = titled(5, "Chain exit law equals the limit reflection law");
  const auto layer = derive_rates({0.5, 0.3, 0.2});
  const auto spec = build_chain(100, layer, layer);
  const auto law = ReflectionLaw::finite(layer, Endpoint::Zero);
  Stream rng_chain = stream_for(opt, 5, "chain");
  Stream rng_law = stream_for(opt, 5, "law");
  constexpr int kDraws = 100000;
  std::vector<double> chain(kDraws), limit(kDraws);
  for (int i = 0; i < kDraws; ++i) {
    chain[i] = boundary_excursion(spec, -1.0, rng_chain).exit_velocity;
    limit[i] = sample_reflection(-1.0, law, rng_law);
  }
  const auto ks = ks_two_sample(chain, limit);
  r.metrics.push_back({"two_sample_ks_p", ks.p_value, 0.001, Compare::Greater});
  return r;
}

CriterionResult master_balance(const AcceptanceOptions&, ViolationTally&) {
  CriterionResult r = titled(6, "Flow balance of every constructed rate system");
  const std::vector<double> grid{-3, -2, -1, -0.5, -0.1, 0.1, 0.5, 1, 2, 3};
  const std::vector<BoundaryLayer> layers{hard_layer(), derive_rates({0.7, 0.3}),
                                          derive_rates({0.4, 0.3, 0.2, 0.1})};
  double worst = 0.0;
  for (int n : {16, 100, 1000, 10000}) {
    for (const auto& lo : layers) {
      for (const auto& hi : layers) {
        const auto spec = build_chain(n, lo, hi);
        worst = std::max(worst, check_master_balance(spec, grid) / n);
      }
    }
    for (double theta : {0.0, 0.5, 2.0}) {
      const auto noisy = build_chain(n, derive_rates({0.6, 0.4}), derive_rates({0.55, 0.45}),
                                     ChainMode::Noisy, theta);
      worst = std::max(worst, check_master_balance(noisy, grid) / n);
    }
  }
  r.metrics.push_back({"max_residual_over_n", worst, 1e-10});
  return r;
}

CriterionResult chain_stationarity(const AcceptanceOptions& opt, ViolationTally& tally) {
  CriterionResult r = titled(7, "Stationarity of the discrete chain");
  const auto t0 = Clock::now();
  const int n = 16;
  const auto layer = derive_rates({0.7, 0.3});
  const auto spec = build_chain(n, layer, layer);
  Stream rng = stream_for(opt, 7);
  ChainState init;
  init.site = std::min(n, static_cast<int>(rng.uniform() * (n + 1)));
  init.memory = rng.normal();
  ChainHorizon horizon;
  horizon.max_jumps = 10000000;
  ChainRunOptions ro;
  ro.memory_bins = 400;
  ro.memory_lo = -6.0;
  ro.memory_hi = 6.0;
  const auto run = simulate_chain(spec, init, horizon, rng, ro);
  tally.chain += run.violations();
  double worst = 0.0;
  for (double occ : run.occupancy) {
    worst = std::max(worst, std::abs(occ / run.elapsed * (n + 1) - 1.0));
  }
  r.metrics.push_back({"max_rel_occupancy_dev", worst, 0.02});
  r.metrics.push_back({"memory_ks_d", ks_distance(run.memory, cdf::std_normal), dthr_of(opt),
                       Compare::Less});
  r.metrics.push_back({"seconds", seconds_since(t0), 120.0, Compare::Less});
  return r;
}

CriterionResult billiard_stationarity(const AcceptanceOptions& opt, ViolationTally& tally) {
  CriterionResult r = titled(8, "Stationarity of the billiard with one-level layers");
  const auto t0 = Clock::now();
  const auto layer = derive_rates({0.7, 0.3});
  const BilliardLaws laws{ReflectionLaw::finite(layer, Endpoint::Zero),
                          ReflectionLaw::finite(layer, Endpoint::One)};
  Stream rng = stream_for(opt, 8);
  BilliardHorizon horizon;
  horizon.max_reflections = 1000000;
  const auto run = simulate_billiard({0.5, -1.0, 0.0}, laws, horizon, rng, 200);
  tally.billiard += check_trajectory(run.trajectory).total();
  r.metrics.push_back({"position_ks_d", ks_distance(run.marginals.x, cdf::uniform01), 0.01,
                       Compare::Less});
  r.metrics.push_back({"velocity_ks_d", ks_distance(run.marginals.ell, cdf::std_normal),
                       dthr_of(opt), Compare::Less});
  r.metrics.push_back({"seconds", seconds_since(t0), 60.0, Compare::Less});
  return r;
}

// Fraction of races won at site 1; the site-1 and site-0 clocks consume
// t = ell^2 / 2 at rates a and b.
double noisy_race(double a, double b, double t, int trials, Stream& rng) {
  int wins = 0;
  for (int i = 0; i < trials; ++i) {
    double y = 0.0;
    while (true) {
      y += rng.exponential() / a;
      if (y >= t) {
        ++wins;
        break;
      }
      y += rng.exponential() / b;
      if (y >= t) break;
    }
  }
  return static_cast<double>(wins) / trials;
}

NoisyLawParams rates_only(double a, double b) {
  // Only the rates enter the sign-change series.
  NoisyLawParams p;
  p.theta1 = 1.0;
  p.beta1_rate = a;
  p.beta2_rate = b;
  p.gamma0 = p.gamma1 = 1.0;
  p.gamma2 = 1.0;
  p.gamma3 = 0.5;
  return p;
}

CriterionResult noisy_p1(const AcceptanceOptions& opt, ViolationTally&) {
  CriterionResult r = titled(9, "Noisy sign-change probability");
  double worst_equal = 0.0;
  for (double b : {0.5, 1.0, 2.0}) {
    const double series = noisy_sign_change_prob(-1.0, rates_only(b, b));
    worst_equal = std::max(worst_equal, std::abs(series - 0.5 * (1.0 + std::exp(-b))));
  }
  r.metrics.push_back({"equal_rate_max_abs_diff", worst_equal, tol_of(opt)});

  Stream rng = stream_for(opt, 9);
  constexpr int kTrials = 100000;
  double worst_z = 0.0;
  const NoisyLawParams cases[] = {rates_only(1.0, 2.5), rates_only(2.5, 1.0),
                                  NoisyLawParams::from_layer(0.6, 0.4, 0.7)};
  for (const auto& params : cases) {
    const double p = noisy_sign_change_prob(-1.0, params);
    const double freq = noisy_race(params.beta1_rate, params.beta2_rate, 0.5, kTrials, rng);
    const auto count = static_cast<std::int64_t>(std::llround(freq * kTrials));
    worst_z = std::max(worst_z, binomial_z(count, kTrials, p));
  }
  r.metrics.push_back({"unequal_rate_max_z", worst_z, 4.0});

  const double base = noisy_sign_change_prob(-1.0, rates_only(1.0, 1.0));
  double worst_gap = 0.0;
  for (double gap : {1e-5, 1e-6, 1e-7}) {
    worst_gap = std::max(worst_gap,
                         std::abs(noisy_sign_change_prob(-1.0, rates_only(1.0, 1.0 + gap)) - base));
  }
  r.metrics.push_back({"continuity_max_abs_diff", worst_gap, 1e-6});
  return r;
}

CriterionResult noisy_degenerate(const AcceptanceOptions& opt, ViolationTally&) {
  CriterionResult r = titled(10, "Noisy law without counter-flow equals the one-level law");
  const auto params = NoisyLawParams::from_layer(0.7, 0.3, 0.0);
  const auto finite = ReflectionLaw::finite(derive_rates({0.7, 0.3}), Endpoint::Zero);
  Stream rng_a = stream_for(opt, 10, "noisy");
  Stream rng_b = stream_for(opt, 10, "noiseless");
  constexpr int kDraws = 100000;
  std::vector<double> a(kDraws), b(kDraws);
  for (int i = 0; i < kDraws; ++i) {
    a[i] = sample_reflection_noisy(-1.0, params, rng_a);
    b[i] = sample_reflection(-1.0, finite, rng_b);
  }
  r.metrics.push_back({"two_sample_ks_p", ks_two_sample(a, b).p_value, 0.001, Compare::Greater});
  return r;
}

CriterionResult structural(const AcceptanceOptions& opt, ViolationTally& tally) {
  CriterionResult r = titled(11, "Structural invariants of simulated paths");
  Stream rng = stream_for(opt, 11);

  std::vector<BilliardLaws> laws;
  laws.push_back({ReflectionLaw::rayleigh(Endpoint::Zero), ReflectionLaw::rayleigh(Endpoint::One)});
  laws.push_back({ReflectionLaw::finite(derive_rates({0.4, 0.3, 0.2, 0.1}), Endpoint::Zero),
                  ReflectionLaw::finite(derive_rates({0.5, 0.5}), Endpoint::One)});
  laws.push_back({ReflectionLaw{Noisy{NoisyLawParams::from_layer(0.6, 0.4, 0.5)}, Endpoint::Zero},
                  ReflectionLaw{NoiselessTruncatedInfinite{InfiniteLayer::geometric(0.5), 1e-8},
                                Endpoint::One}});
  for (const auto& l : laws) {
    BilliardHorizon h;
    h.max_reflections = 100000;
    const BilliardState init{0.1 + 0.8 * rng.uniform(), rng.uniform() < 0.5 ? -1.0 : 1.0, 0.0};
    const auto run = simulate_billiard(init, l, h, rng);
    tally.billiard += check_trajectory(run.trajectory).total();
  }

  struct Case {
    BoundaryLayer lo, hi;
    ChainMode mode;
    double theta;
  };
  const std::vector<Case> cases{
      {hard_layer(), hard_layer(), ChainMode::Noiseless, 0.0},
      {derive_rates({0.7, 0.3}), derive_rates({0.6, 0.4}), ChainMode::Noiseless, 0.0},
      {derive_rates({0.4, 0.3, 0.2, 0.1}), derive_rates({0.7, 0.3}), ChainMode::Noiseless, 0.0},
      {derive_rates({0.6, 0.4}), derive_rates({0.6, 0.4}), ChainMode::Noisy, 0.5},
  };
  for (const auto& c : cases) {
    const auto spec = build_chain(20, c.lo, c.hi, c.mode,
                                  c.mode == ChainMode::Noisy ? std::optional<double>(c.theta)
                                                             : std::nullopt);
    ChainRunOptions ro;
    ro.record_path = true;
    ChainHorizon h;
    h.max_jumps = 500000;
    const auto run = simulate_chain(spec, {10, rng.normal(), 0.0}, h, rng, ro);
    tally.chain += run.violations() + check_path(spec, run.path).total();
  }
  r.metrics.push_back({"billiard_violations", static_cast<double>(tally.billiard), 0.0});
  r.metrics.push_back({"chain_violations", static_cast<double>(tally.chain), 0.0});
  return r;
}

}  // namespace

bool Metric::pass() const {
  switch (cmp) {
    case Compare::LessEq:
      return value <= threshold;
    case Compare::Less:
      return value < threshold;
    case Compare::Greater:
      return value > threshold;
  }
  return false;
}

bool CriterionResult::pass() const {
  return error.empty() && std::all_of(metrics.begin(), metrics.end(),
                                      [](const Metric& m) { return m.pass(); });
}

CriterionResult run_criterion(int id, const AcceptanceOptions& opt, ViolationTally& tally) {
  using Fn = CriterionResult (*)(const AcceptanceOptions&, ViolationTally&);
  static constexpr Fn table[kCriterionCount] = {
      rayleigh_reflection, binomial_levels,   level_oracle,          exit_speed,
      chain_limit_exact,   master_balance,    chain_stationarity,    billiard_stationarity,
      noisy_p1,            noisy_degenerate,  structural};
  if (id < 1 || id > kCriterionCount) throw InvalidInput("no criterion " + std::to_string(id));
  const auto t0 = Clock::now();
  CriterionResult res;
  try {
    res = table[id - 1](opt, tally);
  } catch (const std::exception& e) {
    res.id = id;
    res.error = e.what();
  }
  res.seconds = seconds_since(t0);
  return res;
}

std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& opt, const std::function<void(const CriterionResult&)>& on_result) {
  ViolationTally tally;
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriterionCount; ++id) {
    out.push_back(run_criterion(id, opt, tally));
    if (on_result) on_result(out.back());
  }
  return out;
}

std::string format_result_line(const CriterionResult& r) {
  std::string line = r.pass() ? "PASS" : "FAIL";
  line += " [" + std::to_string(r.id) + "] " + r.title + " |";
  char buf[160];
  for (const auto& m : r.metrics) {
    const char* op = m.cmp == Compare::LessEq ? "<=" : (m.cmp == Compare::Less ? "<" : ">");
    std::snprintf(buf, sizeof buf, " %s=%.6g %s %.6g;", m.name.c_str(), m.value, op, m.threshold);
    line += buf;
  }
  if (!r.error.empty()) line += " error: " + r.error + ";";
  std::snprintf(buf, sizeof buf, " (%.2f s)", r.seconds);
  line += buf;
  return line;
}

}  // namespace billiards
