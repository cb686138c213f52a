#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "relaxoc/model.hpp"

namespace relaxoc {

/// Non-finite state or costate during integration.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t node, double t)
      : std::runtime_error(what + " at node " + std::to_string(node) + " (t=" + std::to_string(t) +
                           ")"),
        node_(node), t_(t) {}
  std::size_t node() const { return node_; }
  double t() const { return t_; }

 private:
  std::size_t node_;
  double t_;
};

/// Grid-sampled arc: values.row(i) is the value at grid[i].
struct Trajectory {
  TimeGrid grid;
  Mat values;  // m x n

  int n() const { return static_cast<int>(values.cols()); }
  Vec at(std::size_t i) const { return values.row(static_cast<Eigen::Index>(i)).transpose(); }
  Vec initial() const { return at(0); }
  Vec terminal() const { return at(grid.size() - 1); }
};

/// Costate p as a row covector per node.
struct AdjointArc {
  TimeGrid grid;
  Mat values;  // m x n

  RowVec at(std::size_t i) const { return values.row(static_cast<Eigen::Index>(i)); }
};

struct VariationalArc {
  TimeGrid grid;
  Mat values;  // m x n
  Vec xi_pert;
  Mat alpha_pert;

  Vec at(std::size_t i) const { return values.row(static_cast<Eigen::Index>(i)).transpose(); }
  Vec terminal() const { return at(grid.size() - 1); }
};

/// Control given piecewise on [b_0, b_p]: each piece is a constant vector or
/// a function of t. Point evaluation is left-continuous (a breakpoint
/// belongs to the piece on its left; b_0 belongs to the first piece).
class PiecewiseControl {
 public:
  using Fn = std::function<Vec(double)>;
  using Value = std::variant<Vec, Fn>;

  PiecewiseControl() = default;
  /// breakpoints includes both ends; values.size() == breakpoints.size() - 1.
  PiecewiseControl(std::vector<double> breakpoints, std::vector<Value> values, int dim);
  static PiecewiseControl constant(double t0, double t1, Vec u);
  static PiecewiseControl function(double t0, double t1, int dim, Fn fn);

  int dim() const { return dim_; }
  std::size_t pieces() const { return values_.size(); }
  const std::vector<double>& breakpoints() const { return breaks_; }
  std::vector<double> interior_breakpoints() const;
  bool is_constant_piece(std::size_t i) const { return std::holds_alternative<Vec>(values_[i]); }

  Vec operator()(double t) const;
  /// Value of piece i at t (t need not lie inside the piece).
  Vec in_piece(std::size_t i, double t) const;
  /// Piece whose interval contains the midpoint of [a, b].
  std::size_t piece_for_step(double a, double b) const;

  /// Largest distance to U over the given sample times.
  double max_set_distance(const ControlSet& U, const std::vector<double>& times) const;

 private:
  std::vector<double> breaks_;
  std::vector<Value> values_;
  int dim_ = 0;
};

/// k component controls and weights on the simplex, piecewise constant on
/// [node_i, node_{i+1}) of the weight grid.
class RelaxedControl {
 public:
  RelaxedControl() = default;
  RelaxedControl(std::vector<PiecewiseControl> controls, TimeGrid grid, Mat weights);
  static RelaxedControl single(PiecewiseControl u, TimeGrid grid);
  /// Constant weights over the whole grid.
  static RelaxedControl constant_weights(std::vector<PiecewiseControl> controls, TimeGrid grid,
                                         const RowVec& w);

  int k() const { return static_cast<int>(controls_.size()); }
  const std::vector<PiecewiseControl>& controls() const { return controls_; }
  const TimeGrid& grid() const { return grid_; }
  const Mat& weights() const { return weights_; }
  /// Row of the weight interval containing t.
  RowVec weights_at(double t) const;
  std::size_t weight_row(double t) const;

 private:
  std::vector<PiecewiseControl> controls_;
  TimeGrid grid_;
  Mat weights_;
};

/// sum_i w_i(t) phi(t, x, u_i(t)) with left-continuous controls.
Vec relaxed_rhs(const ControlProblem& prob, const RelaxedControl& rc, double t, const Vec& x);

/// Classical RK4 on the given grid. Controls inside a step come from the
/// piece that contains the step midpoint, so grids refined at breakpoints
/// keep the full order.
Trajectory integrate_state(const ControlProblem& prob, const PiecewiseControl& u, const Vec& xi,
                           const TimeGrid& grid);
Trajectory integrate_relaxed(const ControlProblem& prob, const RelaxedControl& rc, const Vec& xi,
                             const TimeGrid& grid);

/// Tangent of the discrete relaxed flow in the direction (xi_pert,
/// alpha_pert). alpha_pert has one row per node of rc.grid() and one column
/// per extra control (rc's own controls when extra_controls is empty).
/// The result is the exact derivative of the RK4 map, so it matches finite
/// differences of integrate_relaxed up to O(eps).
VariationalArc integrate_variational(const ControlProblem& prob, const RelaxedControl& rc,
                                     const Trajectory& base, const Vec& xi_pert,
                                     const Mat& alpha_pert,
                                     const std::vector<PiecewiseControl>& extra_controls = {});

/// p' = -p sum_i w_i phi_x along base, p(t1) = p_terminal. Uses the adjoint
/// of the RK4 tangent map, so <p, h> is conserved to rounding for
/// homogeneous variations on the same grid.
AdjointArc integrate_adjoint(const ControlProblem& prob, const RelaxedControl& rc,
                             const Trajectory& base, const RowVec& p_terminal);

/// CSV with header t,x1..xn and 17 significant digits.
std::string trajectory_csv(const Trajectory& traj, const std::string& prefix = "x");

}  // namespace relaxoc
