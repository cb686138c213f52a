#pragma once

#include <string>
#include <vector>

#include "relaxoc/catalog.hpp"
#include "relaxoc/integrate.hpp"

namespace relaxoc {

/// s coarse intervals, each split into consecutive subintervals carrying
/// component controls 1..N in order.
struct ChatteringSchedule {
  struct Sub {
    int j = 0;        // coarse interval
    int control = 0;  // 0-based component index
    double a = 0.0, b = 0.0;
  };

  int s = 0;
  int N = 0;
  double t0 = 0.0, t1 = 1.0;
  Mat alpha;  // s x N averaged weights
  std::vector<Sub> subintervals;  // zero-length pieces omitted
  /// Every boundary of u_s (and of the component pieces it uses),
  /// including t0 and t1. Use for grid refinement.
  std::vector<double> breakpoints;
};

/// alpha(j, i): mean of weight i over coarse interval j, computed exactly
/// for the piecewise-constant weight representation.
Mat average_weights(const RelaxedControl& rc, int s);

struct Chattering {
  ChatteringSchedule schedule;
  PiecewiseControl u;
};

Chattering build_chattering(const RelaxedControl& rc, int s);

struct ConvergenceRow {
  int s = 0;
  double sup_error = 0.0;
  double endpoint_error = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;

  bool sup_error_decreasing() const;
  /// Least-squares slope of -log(sup_error) against log(s).
  double sup_error_rate() const;
  std::string csv() const;
  std::string svg() const;
};

/// Errors of chattering trajectories x_s against the relaxed trajectory,
/// both measured at the nodes of grid. Each x_s is integrated on grid
/// subdivided grid_refinement times and refined at the schedule
/// breakpoints. Independent s values run concurrently.
ConvergenceTable convergence_study(const ControlProblem& prob, const RelaxedControl& rc,
                                   const Vec& xi, const std::vector<int>& s_list,
                                   const TimeGrid& grid, int grid_refinement = 1);

/// Slope +-1 interpolant of f through the knots s/n on [0, 1].
struct BrokenLine {
  int n = 0;
  std::vector<double> vertices_t;  // knots and switch points, increasing
  std::vector<double> vertices_x;
  PiecewiseControl u;              // derivative of the interpolant
  double x2_final = 0.0;           // int_0^1 (x1n - f)^2 + u^2 dt

  double x1(double t) const;
};

BrokenLine broken_line(const FSpec& f, int n);

}  // namespace relaxoc
