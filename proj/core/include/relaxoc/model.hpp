#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relaxoc/expr.hpp"

namespace relaxoc {

using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Mat = Eigen::MatrixXd;

/// Raised for inconsistent problem data (dimension mismatch, bad control set).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Closed interval; either endpoint may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct Projection {
  Vec point;
  double distance = 0.0;
};

/// The admissible control set U.
class ControlSet {
 public:
  enum class Kind { Finite, IntervalUnion, Box };

  static ControlSet finite(std::vector<Vec> points);
  /// Scalar controls only. Intervals are sorted on construction and must be
  /// pairwise disjoint.
  static ControlSet interval_union(std::vector<Interval> intervals);
  static ControlSet box(Vec lower, Vec upper);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool bounded() const;

  const std::vector<Vec>& points() const { return points_; }
  const std::vector<Interval>& intervals() const { return intervals_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  /// Nearest point of U (Euclidean). Ties go to the lowest index / leftmost
  /// interval.
  Projection project(const Vec& u) const;
  bool contains(const Vec& u, double tol = 0.0) const { return project(u).distance <= tol; }

  /// Scalar pieces of U clipped to [-window, window]; Box r=1 counts as one
  /// interval. Empty pieces are dropped.
  std::vector<Interval> clipped(double window) const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::Finite;
  int dim_ = 0;
  std::vector<Vec> points_;
  std::vector<Interval> intervals_;
  Vec lower_, upper_;
};

/// x' = phi(t, x, u) with Jacobians derived symbolically.
class DynamicsModel {
 public:
  DynamicsModel() = default;
  DynamicsModel(int n, int r, std::vector<Expr> phi);

  int n() const { return n_; }
  int r() const { return r_; }
  const std::vector<Expr>& phi() const { return phi_; }
  const Expr& phi_x(int i, int j) const { return phi_x_[idx(i, j)]; }
  const Expr& phi_u(int i, int j) const { return phi_u_[static_cast<std::size_t>(i * r_ + j)]; }
  /// Second control derivative, scalar controls only.
  const Expr& phi_uu(int i) const { return phi_uu_.at(static_cast<std::size_t>(i)); }

  Vec rhs(double t, const Vec& x, const Vec& u) const;
  /// Writes into out (size n) without allocating.
  void rhs_into(double t, const Vec& x, const Vec& u, Vec& out) const;
  Mat jacobian_x(double t, const Vec& x, const Vec& u) const;
  Mat jacobian_u(double t, const Vec& x, const Vec& u) const;
  Vec second_u(double t, const Vec& x, const Vec& u) const;

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i * n_ + j); }
  int n_ = 0, r_ = 0;
  std::vector<Expr> phi_;
  std::vector<Expr> phi_x_;  // row-major n x n
  std::vector<Expr> phi_u_;  // row-major n x r
  std::vector<Expr> phi_uu_;
};

/// Value and Jacobians of a vector endpoint map at (zeta1, zeta2).
struct EndpointEval {
  Vec value;
  Mat d_initial;   // rows x n
  Mat d_terminal;  // rows x n
};

/// Endpoint functions f0, f (<= 0) and g (= 0) of (x(t0), x(t1)).
class EndpointData {
 public:
  EndpointData() = default;
  EndpointData(int n, Expr f0, std::vector<Expr> f, std::vector<Expr> g);

  int n() const { return n_; }
  int m1() const { return static_cast<int>(f_.size()); }
  int m2() const { return static_cast<int>(g_.size()); }
  const Expr& f0() const { return f0_; }
  const std::vector<Expr>& f() const { return f_; }
  const std::vector<Expr>& g() const { return g_; }

  EndpointEval eval_f0(const Vec& y, const Vec& z) const;
  EndpointEval eval_f(const Vec& y, const Vec& z) const;
  EndpointEval eval_g(const Vec& y, const Vec& z) const;

 private:
  EndpointEval eval_rows(const std::vector<Expr>& rows,
                         const std::vector<std::vector<Expr>>& grad,
                         const Vec& y, const Vec& z) const;
  int n_ = 0;
  Expr f0_;
  std::vector<Expr> f_, g_;
  // Per row: 2n partial derivatives (d/dy_1..d/dy_n, d/dz_1..d/dz_n).
  std::vector<std::vector<Expr>> f0_grad_, f_grad_, g_grad_;
};

/// Uniform partition of [t0, t1] or a refinement of one.
class TimeGrid {
 public:
  TimeGrid() = default;
  static TimeGrid uniform(double t0, double t1, int m);
  /// Sorted node list; must be strictly increasing with at least 2 nodes.
  static TimeGrid from_nodes(std::vector<double> nodes);
  /// Union of this grid and extra breakpoints. A node closer than
  /// 1e-12 * (t1 - t0) to a breakpoint is replaced by the breakpoint.
  TimeGrid refined(const std::vector<double>& breakpoints) const;

  std::size_t size() const { return nodes_.size(); }
  double t0() const { return nodes_.front(); }
  double t1() const { return nodes_.back(); }
  double operator[](std::size_t i) const { return nodes_[i]; }
  const std::vector<double>& nodes() const { return nodes_; }
  bool uniform() const { return uniform_; }
  /// Index of the interval [node_i, node_{i+1}) containing t (clamped).
  std::size_t interval_of(double t) const;
  /// Index of the node nearest t.
  std::size_t nearest(double t) const;

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) { return a.nodes_ == b.nodes_; }

 private:
  std::vector<double> nodes_;
  bool uniform_ = false;
};

/// Minimize f0 subject to the control system and endpoint
/// constraints.
class ControlProblem {
 public:
  /// When x0 is given, the rows y_i - x0_i are prepended to g so the fixed
  /// initial state is an ordinary equality constraint.
  ControlProblem(std::string name, DynamicsModel dynamics, Expr f0, std::vector<Expr> f,
                 std::vector<Expr> g, ControlSet U, double t0, double t1,
                 std::optional<Vec> x0 = std::nullopt);

  const std::string& name() const { return name_; }
  const DynamicsModel& dynamics() const { return dynamics_; }
  const EndpointData& endpoints() const { return endpoints_; }
  const ControlSet& U() const { return U_; }
  double t0() const { return t0_; }
  double t1() const { return t1_; }
  const std::optional<Vec>& x0() const { return x0_; }
  int n() const { return dynamics_.n(); }
  int r() const { return dynamics_.r(); }

 private:
  std::string name_;
  DynamicsModel dynamics_;
  EndpointData endpoints_;
  ControlSet U_;
  double t0_ = 0.0, t1_ = 1.0;
  std::optional<Vec> x0_;
};

inline std::span<const double> as_span(const Vec& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace relaxoc
