#include <cstdio>

#include <CLI11.hpp>

#include "billiards/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Runs every acceptance criterion and prints one line per criterion."};
  billiards::AcceptanceOptions opt;
  std::vector<int> only;
  app.add_option("--seed", opt.seed, "Run seed");
  app.add_option("--only", only, "Run just these criteria")->check(CLI::Range(1, billiards::kCriterionCount));
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  const auto report = [&](const billiards::CriterionResult& r) {
    std::printf("%s\n", billiards::format_result_line(r).c_str());
    std::fflush(stdout);
    if (!r.pass()) ++failed;
  };
  if (only.empty()) {
    billiards::run_acceptance(opt, report);
  } else {
    billiards::ViolationTally tally;
    for (int id : only) report(billiards::run_criterion(id, opt, tally));
  }
  std::printf("%d of %d criteria failed\n", failed,
              only.empty() ? billiards::kCriterionCount : static_cast<int>(only.size()));
  return failed == 0 ? 0 : 1;
}
