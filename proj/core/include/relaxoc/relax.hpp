#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relaxoc/integrate.hpp"
#include "relaxoc/model.hpp"

namespace relaxoc {

/// The convex extension of a problem with k control slots. Its dynamics
/// take the stacked control (u^1, ..., u^k, alpha) of size k r + k; alpha
/// is constrained to the simplex.
struct ConvexExtension {
  int k = 1;
  int r = 1;
  DynamicsModel dynamics;

  /// Index of component j of slot i in the stacked control.
  int control_index(int slot, int j) const { return slot * r + j; }
  int weight_index(int slot) const { return k * r + slot; }
  Vec stack(const std::vector<Vec>& controls, const RowVec& alpha) const;
  std::string describe() const;
};

ConvexExtension convexify(const ControlProblem& prob, int k);

struct AdmissibilityReport {
  double ode_residual = 0.0;
  double ineq_violation = 0.0;
  double eq_violation = 0.0;
  double set_violation = 0.0;

  double worst() const;
  bool admissible(double tol = 1e-6) const { return worst() <= tol; }
};

/// Residuals of a sampled pair. The ODE residual compares a 3-point
/// difference quotient of traj with the right-hand side at each node. The
/// quotient is one-sided at the ends and at control breakpoints.
AdmissibilityReport admissibility(const ControlProblem& prob, const Trajectory& traj,
                                  const PiecewiseControl& u);
/// Relaxed triple; set_violation covers every component with positive weight.
AdmissibilityReport admissibility(const ControlProblem& prob, const Trajectory& traj,
                                  const RelaxedControl& rc);

struct GrowthSampleSpec {
  double radius = 10.0;
  int x_samples = 4000;
  int u_samples = 64;  // random controls per x sample (interval/box sets)
  int t_samples = 1;   // random times per x sample
  std::optional<double> window;
  std::uint64_t seed = 20240601;
};

struct GrowthCheckReport {
  double K_input = 0.0;
  double max_ratio = 0.0;
  double witness_t = 0.0;
  Vec witness_x;
  Vec witness_u;
  std::size_t samples = 0;
  bool passed = false;
  std::string verdict;
};

/// Sampled sup of |<x, phi(t,x,u)>| / (|x|^2 + 1). Samples come from one
/// seeded stream, so a larger x_samples extends the cloud of a smaller one.
GrowthCheckReport check_growth(const ControlProblem& prob, double K, const GrowthSampleSpec& spec);

struct CaratheodoryResult {
  Vec weights;
  std::vector<int> support;
  int iterations = 0;
  double max_condition = 1.0;
  bool degenerate = false;
};

/// Reduces a convex combination of points in R^n to one with at most n+1
/// positive weights and the same barycenter.
CaratheodoryResult caratheodory_reduce(const std::vector<Vec>& points, const Vec& weights);

}  // namespace relaxoc
