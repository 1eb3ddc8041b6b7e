#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace billiards {

enum class Compare { LessEq, Less, Greater };

struct Metric {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  Compare cmp = Compare::LessEq;

  bool pass() const;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Metric> metrics;
  double seconds = 0.0;
  std::string error;  // set when the criterion threw

  bool pass() const;
};

struct AcceptanceOptions {
  std::uint64_t seed = 0;
  // Overrides the memory/velocity KS distance thresholds (default 0.02).
  std::optional<double> d_threshold;
  // Overrides closed-form agreement tolerances (default 1e-10).
  std::optional<double> tol;
};

// Structural violations seen by the simulation criteria, summed across the
// suite.
struct ViolationTally {
  std::uint64_t billiard = 0;
  std::uint64_t chain = 0;
};

inline constexpr int kCriterionCount = 11;

CriterionResult run_criterion(int id, const AcceptanceOptions& opt, ViolationTally& tally);

// Runs every criterion in order; `on_result` sees each as it finishes.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& opt,
    const std::function<void(const CriterionResult&)>& on_result = {});

// "PASS [3] title | name=value <= threshold; ..."
std::string format_result_line(const CriterionResult& r);

}  // namespace billiards
