#include "billiards/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "billiards/acceptance.hpp"
#include "billiards/billiard.hpp"
#include "billiards/chain.hpp"
#include "billiards/error.hpp"
#include "billiards/exp_sums.hpp"
#include "billiards/reflection.hpp"
#include "billiards/stats.hpp"

namespace billiards {

namespace {

constexpr double kDefaultEll = -1.0;
constexpr double kOccupancyTol = 0.02;
constexpr double kPositionDTol = 0.01;
constexpr double kPValueFloor = 0.001;
constexpr double kHistogramSpan = 5.0;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
T need(const std::optional<T>& v, const char* key, std::string_view command) {
  if (!v) throw ValidationError(std::string(command) + " needs '" + key + "'");
  return *v;
}

double incoming_ell(const ExperimentConfig& cfg) {
  const double ell = cfg.ell0.value_or(kDefaultEll);
  if (!(ell < 0.0)) throw ValidationError("ell0 must be negative (incoming at endpoint 0)");
  return ell;
}

// Runs body(replica) for every replica on its own thread; results land in
// replica order regardless of finishing order.
template <class Result, class Fn>
std::vector<Result> per_replica(int replicas, Fn body) {
  std::vector<std::optional<Result>> slots(replicas);
  std::vector<std::exception_ptr> errors(replicas);
  std::vector<std::thread> workers;
  workers.reserve(replicas);
  for (int r = 0; r < replicas; ++r) {
    workers.emplace_back([&, r] {
      try {
        slots[r].emplace(body(r));
      } catch (...) {
        errors[r] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(replicas);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// [begin, end) of the chunk that replica r draws out of `total`.
std::pair<std::uint64_t, std::uint64_t> chunk(std::uint64_t total, int replicas, int r) {
  const std::uint64_t lo = total * static_cast<std::uint64_t>(r) / replicas;
  const std::uint64_t hi = total * static_cast<std::uint64_t>(r + 1) / replicas;
  return {lo, hi};
}

NoisyLawParams noisy_params(const BoundaryLayer& layer, const ExperimentConfig& cfg) {
  if (layer.depth() != 1) throw ValidationError("noisy mode needs a two-entry beta layer");
  const double theta = need(cfg.theta1, "theta1", "noisy mode");
  return NoisyLawParams::from_layer(layer.betas[0], layer.betas[1], theta);
}

ReflectionLaw law_for(const ExperimentConfig& cfg, Endpoint end) {
  const auto layer = end == Endpoint::Zero ? cfg.lower_layer() : cfg.upper_layer();
  switch (cfg.mode) {
    case LawMode::Noiseless:
      return ReflectionLaw::finite(layer, end);
    case LawMode::Noisy:
      return ReflectionLaw{Noisy{noisy_params(layer, cfg)}, end};
    case LawMode::Infinite:
      return ReflectionLaw{
          NoiselessTruncatedInfinite{InfiniteLayer::geometric(need(cfg.beta_ratio, "beta_ratio",
                                                                   "infinite mode")),
                                     cfg.eps.value_or(1e-8)},
          end};
  }
  throw ValidationError("unknown mode");
}

struct Report {
  std::string csv = "metric,value,threshold,pass\n";
  bool pass = true;

  void add(const std::string& name, double value, double threshold, Compare cmp) {
    const Metric m{name, value, threshold, cmp};
    pass = pass && m.pass();
    csv += name + "," + num(value) + "," + num(threshold) + "," + (m.pass() ? "1" : "0") + "\n";
  }
};

std::string histogram_csv(const Histogram& h) {
  std::string csv = "bin_lo,bin_hi,weight\n";
  for (std::size_t i = 0; i < h.bins(); ++i) {
    csv += num(h.edge(i)) + "," + num(h.edge(i + 1)) + "," + num(h.weights()[i]) + "\n";
  }
  return csv;
}

CommandOutput reflect_sample(const ExperimentConfig& cfg) {
  const auto samples = need(cfg.samples, "samples", "reflect-sample");
  const double ell = incoming_ell(cfg);
  const auto law = law_for(cfg, Endpoint::Zero);
  const auto chunks = per_replica<std::vector<double>>(cfg.replicas, [&](int r) {
    Stream rng(cfg.seed, r, "reflect-sample");
    const auto [lo, hi] = chunk(samples, cfg.replicas, r);
    std::vector<double> draws(hi - lo);
    for (auto& d : draws) d = sample_reflection(ell, law, rng);
    return draws;
  });
  CommandOutput out;
  out.csv = "value\n";
  for (const auto& c : chunks) {
    for (double d : c) out.csv += num(d) + "\n";
  }
  return out;
}

CommandOutput level_probs(const ExperimentConfig& cfg) {
  const double ell = incoming_ell(cfg);
  std::vector<double> p;
  switch (cfg.mode) {
    case LawMode::Noiseless:
      p = level_probabilities(ell, cfg.lower_layer());
      break;
    case LawMode::Noisy: {
      const double p1 = noisy_sign_change_prob(ell, noisy_params(cfg.lower_layer(), cfg),
                                               cfg.tol.value_or(1e-13));
      p = {1.0 - p1, p1};
      break;
    }
    case LawMode::Infinite: {
      const auto layer = InfiniteLayer::geometric(need(cfg.beta_ratio, "beta_ratio", "level-probs"));
      p = level_probabilities_truncated(ell, layer.mus, cfg.eps.value_or(1e-8)).probs;
      break;
    }
  }
  CommandOutput out;
  out.csv = "level,probability\n";
  for (std::size_t k = 0; k < p.size(); ++k) out.csv += std::to_string(k) + "," + num(p[k]) + "\n";
  return out;
}

CommandOutput density(const ExperimentConfig& cfg) {
  const int points = cfg.points.value_or(201);
  CommandOutput out;
  if (cfg.mode == LawMode::Noisy) {
    const auto params = noisy_params(cfg.lower_layer(), cfg);
    const double r_max = cfg.r_max.value_or(4.0);
    out.csv = "ell,p1\n";
    for (int i = 1; i <= points; ++i) {
      const double ell = -r_max * i / points;
      out.csv += num(ell) + "," + num(noisy_sign_change_prob(ell, params, cfg.tol.value_or(1e-13))) +
                 "\n";
    }
    return out;
  }
  if (cfg.mode == LawMode::Infinite) throw ValidationError("density supports noiseless and noisy modes");
  const auto layer = cfg.lower_layer();
  const int k = cfg.level.value_or(0);
  if (k < 0 || static_cast<std::size_t>(k) > layer.depth()) {
    throw ValidationError("level must lie in 0..N");
  }
  const std::vector<double> tail(layer.lambdas.begin() + k, layer.lambdas.end());
  const double r_max = cfg.r_max.value_or(std::sqrt(2.0 * tail_cutoff(ExpSumSpec(tail), 1e-12)));
  out.csv = "r,density,cdf\n";
  for (int i = 0; i < points; ++i) {
    const double r = r_max * i / (points - 1);
    out.csv += num(r) + "," + num(exit_speed_density(k, layer.lambdas, r)) + "," +
               num(exit_speed_cdf(k, layer.lambdas, r)) + "\n";
  }
  return out;
}

ChainSpec chain_for(const ExperimentConfig& cfg, std::string_view command) {
  const int n = need(cfg.n, "n", command);
  switch (cfg.mode) {
    case LawMode::Noiseless:
      return build_chain(n, cfg.lower_layer(), cfg.upper_layer());
    case LawMode::Noisy:
      return build_chain(n, cfg.lower_layer(), cfg.upper_layer(), ChainMode::Noisy,
                         need(cfg.theta1, "theta1", command));
    case LawMode::Infinite:
      break;
  }
  throw ValidationError(std::string(command) + " needs a finite layer");
}

CommandOutput chain_run(const ExperimentConfig& cfg) {
  const auto spec = chain_for(cfg, "chain-run");
  if (!cfg.events && !cfg.horizon) throw ValidationError("chain-run needs 'events' or 'horizon'");
  ChainHorizon horizon;
  if (cfg.events) horizon.max_jumps = *cfg.events;
  if (cfg.horizon) horizon.max_time = *cfg.horizon;
  ChainState init;
  init.site = static_cast<int>(std::lround(cfg.x0.value_or(0.5) * spec.n));
  init.memory = cfg.ell0.value_or(kDefaultEll);
  ChainRunOptions ro;
  ro.memory_lo = -kHistogramSpan;
  ro.memory_hi = kHistogramSpan;
  ro.memory_bins = static_cast<std::size_t>(cfg.bins);

  auto runs = per_replica<ChainSummary>(cfg.replicas, [&](int r) {
    Stream rng(cfg.seed, r, "chain-run");
    return simulate_chain(spec, init, horizon, rng, ro);
  });
  ChainSummary total = std::move(runs.front());
  for (std::size_t r = 1; r < runs.size(); ++r) {
    for (std::size_t j = 0; j < total.occupancy.size(); ++j) total.occupancy[j] += runs[r].occupancy[j];
    total.memory.merge(runs[r].memory);
    total.elapsed += runs[r].elapsed;
    total.jumps += runs[r].jumps;
    total.sign_changes += runs[r].sign_changes;
    total.slope_violations += runs[r].slope_violations;
    total.continuity_violations += runs[r].continuity_violations;
    total.direction_violations += runs[r].direction_violations;
  }

  double worst = 0.0;
  for (double occ : total.occupancy) {
    worst = std::max(worst, std::abs(occ / total.elapsed * (spec.n + 1) - 1.0));
  }
  Report rep;
  rep.add("jumps", static_cast<double>(total.jumps), 0.0, Compare::Greater);
  rep.add("max_rel_occupancy_dev", worst, kOccupancyTol, Compare::LessEq);
  rep.add("memory_ks_d", ks_distance(total.memory, cdf::std_normal), cfg.d_threshold.value_or(0.02),
          Compare::Less);
  rep.add("violations", static_cast<double>(total.violations()), 0.0, Compare::LessEq);

  CommandOutput out;
  out.csv = rep.csv;
  out.pass = rep.pass;
  out.extra.push_back({"_memory.csv", histogram_csv(total.memory)});
  std::string occ = "site,time\n";
  for (std::size_t j = 0; j < total.occupancy.size(); ++j) {
    occ += std::to_string(j) + "," + num(total.occupancy[j]) + "\n";
  }
  out.extra.push_back({"_occupancy.csv", std::move(occ)});
  return out;
}

CommandOutput excursion(const ExperimentConfig& cfg) {
  const auto spec = chain_for(cfg, "excursion");
  const auto samples = need(cfg.samples, "samples", "excursion");
  const double ell = incoming_ell(cfg);

  struct Batch {
    std::vector<std::int64_t> levels;
    std::vector<double> chain;
    std::vector<double> limit;
  };
  const auto law = law_for(cfg, Endpoint::Zero);
  const auto batches = per_replica<Batch>(cfg.replicas, [&](int r) {
    Stream rng_chain(cfg.seed, r, "excursion/chain");
    Stream rng_law(cfg.seed, r, "excursion/law");
    const auto [lo, hi] = chunk(samples, cfg.replicas, r);
    Batch b;
    b.levels.assign(spec.N0 + 1, 0);
    for (std::uint64_t i = lo; i < hi; ++i) {
      const auto ex = boundary_excursion(spec, ell, rng_chain);
      ++b.levels[ex.sign_change_level];
      b.chain.push_back(ex.exit_velocity);
      b.limit.push_back(sample_reflection(ell, law, rng_law));
    }
    return b;
  });
  Batch all;
  all.levels.assign(spec.N0 + 1, 0);
  for (const auto& b : batches) {
    for (std::size_t k = 0; k < b.levels.size(); ++k) all.levels[k] += b.levels[k];
    all.chain.insert(all.chain.end(), b.chain.begin(), b.chain.end());
    all.limit.insert(all.limit.end(), b.limit.begin(), b.limit.end());
  }

  std::vector<double> p;
  if (cfg.mode == LawMode::Noisy) {
    const double p1 = noisy_sign_change_prob(ell, noisy_params(cfg.lower_layer(), cfg));
    p = {1.0 - p1, p1};
  } else {
    p = level_probabilities(ell, cfg.lower_layer());
  }
  Report rep;
  rep.add("level_chi_square_p", chi_square_test(all.levels, p).p_value, kPValueFloor,
          Compare::Greater);
  rep.add("exit_velocity_ks_p", ks_two_sample(all.chain, all.limit).p_value, kPValueFloor,
          Compare::Greater);

  CommandOutput out;
  out.csv = rep.csv;
  out.pass = rep.pass;
  std::string levels = "level,count,expected\n";
  for (std::size_t k = 0; k < p.size(); ++k) {
    levels += std::to_string(k) + "," + std::to_string(all.levels[k]) + "," +
              num(p[k] * static_cast<double>(samples)) + "\n";
  }
  out.extra.push_back({"_levels.csv", std::move(levels)});
  return out;
}

CommandOutput billiard_run(const ExperimentConfig& cfg) {
  if (!cfg.events && !cfg.horizon) throw ValidationError("billiard-run needs 'events' or 'horizon'");
  const BilliardLaws laws{law_for(cfg, Endpoint::Zero), law_for(cfg, Endpoint::One)};
  BilliardHorizon horizon;
  if (cfg.events) horizon.max_reflections = *cfg.events;
  if (cfg.horizon) horizon.max_time = *cfg.horizon;
  const BilliardState init{cfg.x0.value_or(0.5), cfg.ell0.value_or(kDefaultEll), 0.0};
  const auto bins = static_cast<std::size_t>(cfg.bins);

  struct Piece {
    Marginals marginals;
    std::uint64_t violations = 0;
  };
  const auto pieces = per_replica<Piece>(cfg.replicas, [&](int r) {
    Stream rng(cfg.seed, r, "billiard-run");
    auto run = simulate_billiard(init, laws, horizon, rng, bins);
    return Piece{std::move(run.marginals), check_trajectory(run.trajectory).total()};
  });

  Histogram x(0.0, 1.0, bins);
  std::vector<double> values, weights;
  std::uint64_t violations = 0;
  for (const auto& p : pieces) {
    x.merge(p.marginals.x);
    values.insert(values.end(), p.marginals.ell.values().begin(), p.marginals.ell.values().end());
    weights.insert(weights.end(), p.marginals.ell.weights().begin(), p.marginals.ell.weights().end());
    violations += p.violations;
  }
  const WeightedSamples ell(std::move(values), std::move(weights));

  Report rep;
  rep.add("position_ks_d", ks_distance(x, cdf::uniform01), kPositionDTol, Compare::Less);
  rep.add("velocity_ks_d", ks_distance(ell, cdf::std_normal), cfg.d_threshold.value_or(0.02),
          Compare::Less);
  rep.add("violations", static_cast<double>(violations), 0.0, Compare::LessEq);

  Histogram ell_hist(-kHistogramSpan, kHistogramSpan, bins);
  for (std::size_t i = 0; i < ell.size(); ++i) ell_hist.add_point(ell.values()[i], ell.weights()[i]);

  CommandOutput out;
  out.csv = rep.csv;
  out.pass = rep.pass;
  out.extra.push_back({"_x.csv", histogram_csv(x)});
  out.extra.push_back({"_ell.csv", histogram_csv(ell_hist)});
  return out;
}

CommandOutput verify(const ExperimentConfig& cfg) {
  AcceptanceOptions opt;
  opt.seed = cfg.seed;
  opt.d_threshold = cfg.d_threshold;
  opt.tol = cfg.tol;
  Report rep;
  run_acceptance(opt, [&](const CriterionResult& r) {
    const std::string prefix = "c" + std::to_string(r.id) + ".";
    for (const auto& m : r.metrics) rep.add(prefix + m.name, m.value, m.threshold, m.cmp);
    if (!r.error.empty()) rep.add(prefix + "error", 1.0, 0.0, Compare::LessEq);
  });
  CommandOutput out;
  out.csv = rep.csv;
  out.pass = rep.pass;
  return out;
}

}  // namespace

const std::vector<std::string_view>& command_names() {
  static const std::vector<std::string_view> names{
      "reflect-sample", "level-probs", "density", "chain-run", "excursion", "billiard-run", "verify"};
  return names;
}

CommandOutput run_command(std::string_view command, const ExperimentConfig& cfg) {
  try {
    if (command == "reflect-sample") return reflect_sample(cfg);
    if (command == "level-probs") return level_probs(cfg);
    if (command == "density") return density(cfg);
    if (command == "chain-run") return chain_run(cfg);
    if (command == "excursion") return excursion(cfg);
    if (command == "billiard-run") return billiard_run(cfg);
    if (command == "verify") return verify(cfg);
  } catch (const InvalidInput& e) {
    // Model preconditions broken by the config.
    throw ValidationError(e.what());
  }
  throw ValidationError("unknown command '" + std::string(command) + "'");
}

void write_outputs(const CommandOutput& result, const std::optional<std::string>& out,
                   std::ostream& fallback) {
  if (!out) {
    fallback << result.csv;
    return;
  }
  const auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + p.string() + "'");
    f << text;
  };
  const std::filesystem::path main(*out);
  write(main, result.csv);
  const auto stem = main.parent_path() / main.stem();
  for (const auto& a : result.extra) write(stem.string() + a.suffix, a.csv);
}

}  // namespace billiards
