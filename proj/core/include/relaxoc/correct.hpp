#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relaxoc/integrate.hpp"
#include "relaxoc/relax.hpp"

namespace relaxoc {

/// A fixed q x d operator (q <= d, full row rank) with a complete
/// orthogonal factorization; solve() returns the least-norm solution.
class FrozenOperator {
 public:
  explicit FrozenOperator(Mat A);

  const Mat& matrix() const { return A_; }
  Eigen::Index rows() const { return A_.rows(); }
  Eigen::Index cols() const { return A_.cols(); }
  Vec solve(const Vec& F) const;
  /// max |A - Q R Z P'| over the entries.
  double reconstruction_error() const { return recon_error_; }

 private:
  Mat A_;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod_;
  double recon_error_ = 0.0;
};

enum class CorrectionStatus { Converged, MaxIterations, Diverged, RankDeficient };
const char* to_string(CorrectionStatus s);

struct CorrectionResult {
  Vec params;
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  CorrectionStatus status = CorrectionStatus::MaxIterations;
  /// Largest |F(x_n)| / |F(x_{n-1})| seen.
  double max_contraction = 0.0;
  std::vector<double> trace;  // residual norm per iterate, starting at x0

  std::string trace_csv() const;
  nlohmann::json to_json() const;
};

using ResidualFn = std::function<Vec(const Vec&)>;

/// x_n = x_{n-1} - A^+ F(x_{n-1}) with A frozen. Stops when |F| <= tol,
/// after max_iter steps, or when |F| grows on two consecutive steps.
CorrectionResult modified_newton(const ResidualFn& F, const FrozenOperator& frozen, const Vec& x0,
                                 double tol, int max_iter);

struct CorrectionOptions {
  std::vector<int> free_xi;  // 0-based state components that may move
  int weight_panels = 8;     // piecewise-constant weight perturbation basis
  double tol = 1e-8;
  int max_iter = 50;
  double active_tol = 1e-9;  // f_i >= -active_tol counts as active
  int grid_nodes = 2001;
};

/// Parameters theta = (xi shifts on free_xi, panel weight shifts). Panel p
/// and component i < k-1 shift weight i up and weight k-1 down.
struct EndpointParametrization {
  std::vector<int> free_xi;
  int panels = 0;
  int k = 1;
  std::vector<int> rows;  // residual rows: active f first, then g (indices into f/g)
  int active_f = 0;

  int dim() const { return static_cast<int>(free_xi.size()) + panels * (k - 1); }
};

/// Same relaxed control on a weight grid that contains the panel
/// boundaries, so each weight interval lies in exactly one panel.
RelaxedControl panel_aligned(const RelaxedControl& rc, int panels);
int panel_of(const RelaxedControl& rc, std::size_t row, int panels);

EndpointParametrization make_parametrization(const ControlProblem& prob, const RelaxedControl& rc,
                                             const Vec& xi, const CorrectionOptions& opts);

/// The relaxed control with weights shifted by theta, projected back onto
/// the simplex if a shift leaves it.
RelaxedControl perturbed_control(const RelaxedControl& rc, const EndpointParametrization& par,
                                 const Vec& theta);
Vec perturbed_xi(const Vec& xi, const EndpointParametrization& par, const Vec& theta);

/// Endpoint residual rows of a trajectory.
Vec endpoint_residual(const ControlProblem& prob, const EndpointParametrization& par,
                      const Trajectory& x);

/// d(residual)/d(theta) of the relaxed system at theta = 0 from the
/// equation in variations on grid.
Mat relaxed_sensitivity(const ControlProblem& prob, const RelaxedControl& rc, const Vec& xi,
                        const EndpointParametrization& par, const TimeGrid& grid);

struct EndpointCorrection {
  CorrectionResult result;
  EndpointParametrization parametrization;
  Mat sensitivity;             // rows kept in the Newton system
  std::vector<int> kept_rows;  // positions in parametrization.rows
  Vec xi;
  RelaxedControl rc;           // corrected relaxed control
  PiecewiseControl u;          // chattering control built from rc
  Trajectory x;                // plain trajectory of u
  AdmissibilityReport admissibility;
  double sup_distance = 0.0;   // to the relaxed base trajectory
  std::string message;
};

/// Drives the endpoint residual of the rate-s chattering trajectory to zero
/// with a modified Newton iteration frozen at the relaxed sensitivities.
EndpointCorrection correct_endpoints(const ControlProblem& prob, const RelaxedControl& rc,
                                     const Vec& xi, int s, const CorrectionOptions& opts = {});

}  // namespace relaxoc
