#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "billiards/reflection.hpp"

namespace billiards {

enum class LawMode { Noiseless, Noisy, Infinite };

struct ExperimentConfig {
  std::string command;

  std::optional<BoundaryLayer> beta;        // default for both ends
  std::optional<BoundaryLayer> beta_minus;  // endpoint 0
  std::optional<BoundaryLayer> beta_plus;   // endpoint 1
  LawMode mode = LawMode::Noiseless;
  std::optional<double> beta_ratio;  // geometric infinite layer
  std::optional<double> theta1;

  std::optional<int> n;
  std::optional<double> ell0;
  std::optional<double> x0;
  std::optional<std::uint64_t> events;
  std::optional<double> horizon;
  std::optional<std::uint64_t> samples;
  std::optional<int> level;
  std::optional<double> r_max;
  std::optional<int> points;
  std::optional<double> eps;
  std::optional<double> tol;
  std::optional<double> d_threshold;

  std::uint64_t seed = 0;
  int replicas = 1;
  int bins = 64;

  // Lower layer: beta_minus, else beta, else a hard boundary.
  BoundaryLayer lower_layer() const;
  BoundaryLayer upper_layer() const;
};

// `key = value` per line, `#` starts a comment, lists are comma separated.
// Throws ParseError (with line number) for malformed lines or unknown keys
// and ValidationError for values that break a model precondition.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

}  // namespace billiards
