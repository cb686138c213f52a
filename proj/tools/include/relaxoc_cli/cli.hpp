#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <relaxoc/scenarios.hpp>

namespace relaxoc::cli {

enum ExitCode : int { kOk = 0, kAssertionFailed = 1, kConfigError = 2 };

struct RunConfig {
  std::string mode;        // example, check-mp, chatter-study, correct, growth-check
  int example = 0;         // 1..4 for mode == example
  std::string problem;     // catalog name or problem file path
  int grid = 2001;
  double window = 100.0;
  double tol = 1e-6;
  std::string out_dir = "./out";
  bool strict = false;
  std::vector<int> s_list;
  std::vector<int> n_list;
  std::string fspec = "0 0.5";
  std::string g = "3*u1";
  double eps = 0.5;
  int pairs = 201;
  double K = 1.0;
  double radius = 10.0;
  int samples = 4000;
  std::vector<int> free_xi;  // 1-based on the command line
  int panels = 8;
};

/// Throws ConfigError when the config is inconsistent.
void validate(const RunConfig& cfg);

/// Runs the configured mode and returns its report without writing files.
ScenarioReport execute(const RunConfig& cfg);

/// Full command line entry point.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace relaxoc::cli
