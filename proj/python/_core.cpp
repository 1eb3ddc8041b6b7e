#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "billiards/acceptance.hpp"
#include "billiards/billiard.hpp"
#include "billiards/chain.hpp"
#include "billiards/config.hpp"
#include "billiards/error.hpp"
#include "billiards/experiments.hpp"
#include "billiards/random.hpp"
#include "billiards/reflection.hpp"

namespace py = pybind11;
using namespace billiards;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

ReflectionLaw law_of(const std::string& mode, const std::vector<double>& betas,
                     std::optional<double> theta1, std::optional<double> ratio, Endpoint end) {
  if (mode == "noiseless") return ReflectionLaw::finite(derive_rates(betas), end);
  if (mode == "noisy") {
    if (betas.size() != 2 || !theta1) throw InvalidInput("noisy mode needs two betas and theta1");
    return {Noisy{NoisyLawParams::from_layer(betas[0], betas[1], *theta1)}, end};
  }
  if (mode == "infinite") {
    if (!ratio) throw InvalidInput("infinite mode needs beta_ratio");
    return {NoiselessTruncatedInfinite{InfiniteLayer::geometric(*ratio), 1e-8}, end};
  }
  throw InvalidInput("mode must be noiseless, noisy or infinite");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic billiards with boundary-layer reflections";

  // Translators run newest first, so the base class goes in before the rest.
  py::register_exception<Error>(m, "BilliardsError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<DegenerateRates>(m, "DegenerateRates", PyExc_ArithmeticError);

  py::class_<BoundaryLayer>(m, "BoundaryLayer")
      .def_readonly("betas", &BoundaryLayer::betas)
      .def_readonly("lambdas", &BoundaryLayer::lambdas)
      .def_readonly("mus", &BoundaryLayer::mus)
      .def_property_readonly("depth", &BoundaryLayer::depth);

  m.def("derive_rates", &derive_rates, py::arg("betas"));

  m.def(
      "level_probabilities",
      [](double ell, const std::vector<double>& betas) {
        return to_array(level_probabilities(ell, derive_rates(betas)));
      },
      py::arg("ell"), py::arg("betas"));

  m.def(
      "exit_speed_density",
      [](std::size_t k, const std::vector<double>& betas, py::array_t<double> r) {
        const auto layer = derive_rates(betas);
        return py::vectorize([&](double x) { return exit_speed_density(k, layer.lambdas, x); })(r);
      },
      py::arg("k"), py::arg("betas"), py::arg("r"));

  m.def(
      "exit_speed_cdf",
      [](std::size_t k, const std::vector<double>& betas, py::array_t<double> r) {
        const auto layer = derive_rates(betas);
        return py::vectorize([&](double x) { return exit_speed_cdf(k, layer.lambdas, x); })(r);
      },
      py::arg("k"), py::arg("betas"), py::arg("r"));

  m.def(
      "noisy_sign_change_prob",
      [](double ell, double beta0, double beta1, double theta1) {
        return noisy_sign_change_prob(ell, NoisyLawParams::from_layer(beta0, beta1, theta1));
      },
      py::arg("ell"), py::arg("beta0"), py::arg("beta1"), py::arg("theta1"));

  m.def(
      "sample_reflection",
      [](double ell, std::size_t n, const std::vector<double>& betas, const std::string& mode,
         std::optional<double> theta1, std::optional<double> beta_ratio, std::uint64_t seed) {
        const auto law = law_of(mode, betas, theta1, beta_ratio, Endpoint::Zero);
        std::vector<double> out(n);
        {
          py::gil_scoped_release release;
          Stream rng(seed, 0, "python/sample_reflection");
          for (auto& x : out) x = sample_reflection(ell, law, rng);
        }
        return to_array(out);
      },
      py::arg("ell"), py::arg("n"), py::arg("betas") = std::vector<double>{1.0},
      py::arg("mode") = "noiseless", py::arg("theta1") = py::none(),
      py::arg("beta_ratio") = py::none(), py::arg("seed") = 0);

  m.def(
      "boundary_excursions",
      [](double ell, std::size_t count, const std::vector<double>& betas, int n, std::uint64_t seed) {
        const auto layer = derive_rates(betas);
        const auto spec = build_chain(n, layer, layer);
        std::vector<double> levels(count), exits(count);
        {
          py::gil_scoped_release release;
          Stream rng(seed, 0, "python/boundary_excursions");
          for (std::size_t i = 0; i < count; ++i) {
            const auto ex = boundary_excursion(spec, ell, rng);
            levels[i] = ex.sign_change_level;
            exits[i] = ex.exit_velocity;
          }
        }
        return py::make_tuple(to_array(levels), to_array(exits));
      },
      py::arg("ell"), py::arg("count"), py::arg("betas"), py::arg("n") = 100, py::arg("seed") = 0);

  m.def(
      "simulate_billiard",
      [](std::uint64_t reflections, const std::vector<double>& betas, const std::string& mode,
         std::optional<double> theta1, std::optional<double> beta_ratio, double x0, double ell0,
         std::uint64_t seed) {
        const BilliardLaws laws{law_of(mode, betas, theta1, beta_ratio, Endpoint::Zero),
                                law_of(mode, betas, theta1, beta_ratio, Endpoint::One)};
        BilliardHorizon h;
        h.max_reflections = reflections;
        std::optional<BilliardRun> run;
        {
          py::gil_scoped_release release;
          Stream rng(seed, 0, "python/simulate_billiard");
          run.emplace(simulate_billiard({x0, ell0, 0.0}, laws, h, rng));
        }
        py::dict d;
        d["times"] = to_array(run->trajectory.times);
        d["velocities"] = to_array(run->trajectory.velocities);
        d["end_time"] = run->trajectory.end_time;
        d["violations"] = check_trajectory(run->trajectory).total();
        return d;
      },
      py::arg("reflections"), py::arg("betas") = std::vector<double>{1.0},
      py::arg("mode") = "noiseless", py::arg("theta1") = py::none(),
      py::arg("beta_ratio") = py::none(), py::arg("x0") = 0.5, py::arg("ell0") = -1.0,
      py::arg("seed") = 0);

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config_text) {
        const auto cfg = parse_config(config_text);
        CommandOutput out;
        {
          py::gil_scoped_release release;
          out = run_command(command, cfg);
        }
        py::dict extra;
        for (const auto& a : out.extra) extra[py::str(a.suffix)] = a.csv;
        return py::make_tuple(out.csv, extra, out.pass);
      },
      py::arg("command"), py::arg("config_text"));

  m.def(
      "run_criterion",
      [](int id, std::uint64_t seed) {
        AcceptanceOptions opt;
        opt.seed = seed;
        ViolationTally tally;
        CriterionResult r;
        {
          py::gil_scoped_release release;
          r = run_criterion(id, opt, tally);
        }
        return py::make_tuple(r.pass(), format_result_line(r));
      },
      py::arg("id"), py::arg("seed") = 0);

  m.attr("criterion_count") = kCriterionCount;
}
