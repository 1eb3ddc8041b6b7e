#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "billiards/config.hpp"

namespace billiards {

// A CSV written next to the main output as <stem><suffix>.
struct Artifact {
  std::string suffix;
  std::string csv;
};

struct CommandOutput {
  std::string csv;  // main output
  std::vector<Artifact> extra;
  bool pass = true;  // false when a reported metric misses its threshold
};

const std::vector<std::string_view>& command_names();

// Runs one subcommand. Throws ValidationError when the config lacks what the
// command needs.
CommandOutput run_command(std::string_view command, const ExperimentConfig& cfg);

// Writes the main CSV to `out` (stdout when empty) and every artifact next
// to it. Artifacts are dropped when there is no output path.
void write_outputs(const CommandOutput& result, const std::optional<std::string>& out,
                   std::ostream& fallback);

}  // namespace billiards
