#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relaxoc/integrate.hpp"
#include "relaxoc/model.hpp"

namespace relaxoc {

/// Malformed or inconsistent problem file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relaxed control and initial state given in a problem file.
struct TripleSpec {
  std::vector<PiecewiseControl> controls;
  RowVec weights;
  Vec xi;

  /// Constant weights on the given grid.
  RelaxedControl relaxed(const TimeGrid& grid) const;
};

struct ProblemFile {
  ControlProblem problem;
  std::optional<TripleSpec> triple;
};

/// Parses the INI schema described in docs/problem_format.md.
ProblemFile parse_problem(const std::string& text, const std::string& name = "problem");
ProblemFile load_problem(const std::string& path);

}  // namespace relaxoc
