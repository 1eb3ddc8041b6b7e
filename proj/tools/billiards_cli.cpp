#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "billiards/config.hpp"
#include "billiards/error.hpp"
#include "billiards/experiments.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

// One CSV line on stderr so callers can parse failures.
int fail(int code, const std::string& kind, const std::string& what) {
  std::cerr << "error,kind,message\nerror," << kind << ",\"" << what << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-layer billiards: sampling, simulation and acceptance checks."};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  for (auto name : billiards::command_names()) {
    auto* sub = app.add_subcommand(std::string(name));
    sub->add_option("--config", config_path, "Key-value config file")->required();
    sub->add_option("--seed", seed, "Overrides the config seed");
    sub->add_option("--out", out, "Main CSV path; artifacts are written next to it");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    auto cfg = billiards::load_config(config_path);
    cfg.command = command;
    if (seed) cfg.seed = *seed;
    const auto result = billiards::run_command(command, cfg);
    billiards::write_outputs(result, out, std::cout);
    return result.pass ? kExitPass : kExitFail;
  } catch (const billiards::ParseError& e) {
    return fail(kExitUsage, "parse", e.what());
  } catch (const billiards::ValidationError& e) {
    return fail(kExitUsage, "validation", e.what());
  } catch (const billiards::Error& e) {
    return fail(kExitFail, "runtime", e.what());
  }
}
