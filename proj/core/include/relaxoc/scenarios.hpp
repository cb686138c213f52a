#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relaxoc/catalog.hpp"
#include "relaxoc/mp.hpp"

namespace relaxoc {

struct Assertion {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double expected = 0.0;
  std::string tolerance;  // key into ScenarioReport::tolerances
  std::string detail;
};

struct ScenarioReport {
  std::string id;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
  std::map<std::string, double> tolerances;
  std::vector<Assertion> assertions;
  std::map<std::string, std::string> files;  // artifact name -> content

  bool passed() const;
  const Assertion& assertion(const std::string& name) const;
  void check(const std::string& name, bool ok, double value, double expected,
             const std::string& tolerance, std::string detail = {});
  nlohmann::json to_json() const;
  /// Writes report.json and every artifact into out_dir, each atomically.
  /// Returns the written paths.
  std::vector<std::filesystem::path> write(const std::filesystem::path& out_dir) const;
};

struct ScenarioOptions {
  int grid = 2001;
  double window = 100.0;
  double tol = 1e-6;
  bool strict = false;

  MpOptions mp() const;
};

/// x = (f, t), u = (1, -1), weights ((1 + f')/2, (1 - f')/2) averaged per
/// grid interval so x1 matches f at the nodes.
Triple example1_triple(const ControlProblem& prob, const FSpec& f, const TimeGrid& grid);
/// Zero trajectory with controls (-1, 3, 1/3) and weights (3/8, 1/16, 9/16).
Triple example4_triple(const ControlProblem& prob, const TimeGrid& grid);
/// Natural triple for a catalog problem (example2: u = 0, example3: u = 1).
Triple catalog_triple(const std::string& name, const CatalogOptions& opts, const TimeGrid& grid);

ScenarioReport run_example1(const std::string& fspec, const std::vector<int>& n_list,
                            const std::vector<int>& s_list, const ScenarioOptions& opts = {});
ScenarioReport run_example2(const std::string& gspec, double eps, int grid_n,
                            const ScenarioOptions& opts = {});
ScenarioReport run_example3(const std::vector<int>& n_list, const ScenarioOptions& opts = {});
ScenarioReport run_example4(const ScenarioOptions& opts = {});

/// Minimum of x1(1) over controls constant on each of `panels` equal
/// panels with values in {-1, 1/3, 1, 3} and x3(1) <= x3_tol. Exhaustive
/// depth-first search; x3 is nondecreasing, so branches are cut early.
struct Example4BruteForce {
  double min_x1 = 0.0;
  std::vector<double> argmin;
  long long admissible = 0;
};
Example4BruteForce example4_brute_force(int panels = 12, double x3_tol = 1e-12);

}  // namespace relaxoc
