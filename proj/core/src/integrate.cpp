#include "relaxoc/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace relaxoc {

// ---------------------------------------------------------------- controls

PiecewiseControl::PiecewiseControl(std::vector<double> breakpoints, std::vector<Value> values,
                                   int dim)
    : breaks_(std::move(breakpoints)), values_(std::move(values)), dim_(dim) {
  if (dim_ < 1) throw ModelError("piecewise control: dim must be positive");
  if (breaks_.size() < 2 || values_.size() != breaks_.size() - 1)
    throw ModelError("piecewise control: need pieces+1 breakpoints");
  for (std::size_t i = 1; i < breaks_.size(); ++i)
    if (!(breaks_[i - 1] < breaks_[i]))
      throw ModelError("piecewise control: breakpoints must be strictly increasing");
  for (const auto& v : values_)
    if (const Vec* c = std::get_if<Vec>(&v); c && c->size() != dim_)
      throw ModelError("piecewise control: value has wrong dimension");
}

PiecewiseControl PiecewiseControl::constant(double t0, double t1, Vec u) {
  const int dim = static_cast<int>(u.size());
  return PiecewiseControl({t0, t1}, {Value(std::move(u))}, dim);
}

PiecewiseControl PiecewiseControl::function(double t0, double t1, int dim, Fn fn) {
  return PiecewiseControl({t0, t1}, {Value(std::move(fn))}, dim);
}

std::vector<double> PiecewiseControl::interior_breakpoints() const {
  return {breaks_.begin() + 1, breaks_.end() - 1};
}

Vec PiecewiseControl::in_piece(std::size_t i, double t) const {
  const auto& v = values_[i];
  if (const Vec* c = std::get_if<Vec>(&v)) return *c;
  Vec out = std::get<Fn>(v)(t);
  if (out.size() != dim_) throw ModelError("piecewise control: function returned wrong dimension");
  return out;
}

Vec PiecewiseControl::operator()(double t) const {
  // First piece whose right end is >= t.
  auto it = std::lower_bound(breaks_.begin() + 1, breaks_.end() - 1, t);
  return in_piece(static_cast<std::size_t>(it - (breaks_.begin() + 1)), t);
}

std::size_t PiecewiseControl::piece_for_step(double a, double b) const {
  const double mid = 0.5 * (a + b);
  auto it = std::upper_bound(breaks_.begin() + 1, breaks_.end() - 1, mid);
  return static_cast<std::size_t>(it - (breaks_.begin() + 1));
}

double PiecewiseControl::max_set_distance(const ControlSet& U,
                                          const std::vector<double>& times) const {
  double worst = 0.0;
  for (double t : times) worst = std::max(worst, U.project((*this)(t)).distance);
  return worst;
}

RelaxedControl::RelaxedControl(std::vector<PiecewiseControl> controls, TimeGrid grid, Mat weights)
    : controls_(std::move(controls)), grid_(std::move(grid)), weights_(std::move(weights)) {
  if (controls_.empty()) throw ModelError("relaxed control: k must be at least 1");
  if (weights_.rows() != static_cast<Eigen::Index>(grid_.size()) ||
      weights_.cols() != static_cast<Eigen::Index>(controls_.size()))
    throw ModelError("relaxed control: weights must be m x k");
  for (const auto& c : controls_)
    if (c.dim() != controls_.front().dim())
      throw ModelError("relaxed control: component dimensions differ");
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    if ((weights_.row(i).array() < 0.0).any())
      throw ModelError("relaxed control: negative weight at node " + std::to_string(i));
    if (std::fabs(weights_.row(i).sum() - 1.0) > 1e-12)
      throw ModelError("relaxed control: weights off the simplex at node " + std::to_string(i));
  }
}

RelaxedControl RelaxedControl::single(PiecewiseControl u, TimeGrid grid) {
  Mat w = Mat::Ones(static_cast<Eigen::Index>(grid.size()), 1);
  return RelaxedControl({std::move(u)}, std::move(grid), std::move(w));
}

RelaxedControl RelaxedControl::constant_weights(std::vector<PiecewiseControl> controls,
                                                TimeGrid grid, const RowVec& w) {
  Mat W = w.replicate(static_cast<Eigen::Index>(grid.size()), 1);
  return RelaxedControl(std::move(controls), std::move(grid), std::move(W));
}

std::size_t RelaxedControl::weight_row(double t) const { return grid_.interval_of(t); }

RowVec RelaxedControl::weights_at(double t) const {
  return weights_.row(static_cast<Eigen::Index>(weight_row(t)));
}

Vec relaxed_rhs(const ControlProblem& prob, const RelaxedControl& rc, double t, const Vec& x) {
  const auto& dyn = prob.dynamics();
  const RowVec w = rc.weights_at(t);
  Vec acc = Vec::Zero(dyn.n()), tmp(dyn.n());
  bool first = true;
  for (int i = 0; i < rc.k(); ++i) {
    if (w[i] == 0.0) continue;
    dyn.rhs_into(t, x, rc.controls()[static_cast<std::size_t>(i)](t), tmp);
    if (first) {
      acc = w[i] * tmp;
      first = false;
    } else {
      acc += w[i] * tmp;
    }
  }
  return acc;
}

// ------------------------------------------------------------------ kernel

namespace {

/// Everything that is fixed across the four stages of one step.
struct Step {
  double a = 0.0, h = 0.0;
  RowVec w;
  std::vector<std::size_t> pieces;
};

Step make_step(const RelaxedControl& rc, double a, double b) {
  Step s;
  s.a = a;
  s.h = b - a;
  s.w = rc.weights_at(0.5 * (a + b));
  s.pieces.reserve(static_cast<std::size_t>(rc.k()));
  for (const auto& c : rc.controls()) s.pieces.push_back(c.piece_for_step(a, b));
  return s;
}

class Kernel {
 public:
  Kernel(const DynamicsModel& dyn, const RelaxedControl& rc) : dyn_(dyn), rc_(rc), tmp_(dyn.n()) {}

  void rhs(const Step& s, double t, const Vec& x, Vec& out) {
    bool first = true;
    for (int i = 0; i < rc_.k(); ++i) {
      if (s.w[i] == 0.0) continue;
      const auto ii = static_cast<std::size_t>(i);
      dyn_.rhs_into(t, x, rc_.controls()[ii].in_piece(s.pieces[ii], t), tmp_);
      if (first) {
        out = s.w[i] * tmp_;
        first = false;
      } else {
        out += s.w[i] * tmp_;
      }
    }
    if (first) out.setZero(dyn_.n());
  }

  Mat jacobian(const Step& s, double t, const Vec& x) const {
    Mat A = Mat::Zero(dyn_.n(), dyn_.n());
    for (int i = 0; i < rc_.k(); ++i) {
      if (s.w[i] == 0.0) continue;
      const auto ii = static_cast<std::size_t>(i);
      A += s.w[i] * dyn_.jacobian_x(t, x, rc_.controls()[ii].in_piece(s.pieces[ii], t));
    }
    return A;
  }

 private:
  const DynamicsModel& dyn_;
  const RelaxedControl& rc_;
  Vec tmp_;
};

/// Stage states and times of one RK4 step, recomputed from the node value.
struct Stages {
  double t[4];
  Vec X[4];
};

Stages stages(Kernel& K, const Step& s, const Vec& x) {
  Stages st;
  const double h = s.h;
  st.t[0] = s.a;
  st.t[1] = s.a + 0.5 * h;
  st.t[2] = s.a + 0.5 * h;
  st.t[3] = s.a + h;
  Vec k(x.size());
  st.X[0] = x;
  K.rhs(s, st.t[0], st.X[0], k);
  st.X[1] = x + (0.5 * h) * k;
  K.rhs(s, st.t[1], st.X[1], k);
  st.X[2] = x + (0.5 * h) * k;
  K.rhs(s, st.t[2], st.X[2], k);
  st.X[3] = x + h * k;
  return st;
}

void check_base(const TimeGrid& grid, const Trajectory& base, int n) {
  if (base.values.rows() != static_cast<Eigen::Index>(grid.size()))
    throw ModelError("base trajectory does not match its grid");
  if (base.values.cols() != n) throw ModelError("base trajectory has wrong state dimension");
}

}  // namespace

Trajectory integrate_relaxed(const ControlProblem& prob, const RelaxedControl& rc, const Vec& xi,
                             const TimeGrid& grid) {
  const auto& dyn = prob.dynamics();
  const int n = dyn.n();
  if (xi.size() != n) throw ModelError("initial state has wrong dimension");
  if (rc.controls().front().dim() != dyn.r()) throw ModelError("control has wrong dimension");
  Trajectory out{grid, Mat(static_cast<Eigen::Index>(grid.size()), n)};
  Kernel K(dyn, rc);
  Vec x = xi, k1(n), k2(n), k3(n), k4(n), tmp(n);
  out.values.row(0) = x.transpose();
  if (!x.allFinite()) throw IntegrationError("non-finite state", 0, grid[0]);
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    const Step s = make_step(rc, grid[j], grid[j + 1]);
    const double h = s.h, a = s.a;
    K.rhs(s, a, x, k1);
    tmp = x + (0.5 * h) * k1;
    K.rhs(s, a + 0.5 * h, tmp, k2);
    tmp = x + (0.5 * h) * k2;
    K.rhs(s, a + 0.5 * h, tmp, k3);
    tmp = x + h * k3;
    K.rhs(s, a + h, tmp, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw IntegrationError("non-finite state", j + 1, grid[j + 1]);
    out.values.row(static_cast<Eigen::Index>(j + 1)) = x.transpose();
  }
  return out;
}

Trajectory integrate_state(const ControlProblem& prob, const PiecewiseControl& u, const Vec& xi,
                           const TimeGrid& grid) {
  return integrate_relaxed(prob, RelaxedControl::single(u, grid), xi, grid);
}

VariationalArc integrate_variational(const ControlProblem& prob, const RelaxedControl& rc,
                                     const Trajectory& base, const Vec& xi_pert,
                                     const Mat& alpha_pert,
                                     const std::vector<PiecewiseControl>& extra_controls) {
  const auto& dyn = prob.dynamics();
  const int n = dyn.n();
  const TimeGrid& grid = base.grid;
  check_base(grid, base, n);
  if (xi_pert.size() != n) throw ModelError("xi perturbation has wrong dimension");
  const auto& forcing = extra_controls.empty() ? rc.controls() : extra_controls;
  const bool forced = alpha_pert.size() > 0;
  if (forced && (alpha_pert.rows() != static_cast<Eigen::Index>(rc.grid().size()) ||
                 alpha_pert.cols() != static_cast<Eigen::Index>(forcing.size())))
    throw ModelError("alpha perturbation must be (weight grid nodes) x (controls)");

  VariationalArc out{grid, Mat(static_cast<Eigen::Index>(grid.size()), n), xi_pert, alpha_pert};
  Kernel K(dyn, rc);
  Vec h = xi_pert, tmp(n);
  out.values.row(0) = h.transpose();

  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    const Step s = make_step(rc, grid[j], grid[j + 1]);
    const Stages st = stages(K, s, base.at(j));
    RowVec da;
    std::vector<std::size_t> fp;
    if (forced) {
      da = alpha_pert.row(static_cast<Eigen::Index>(rc.weight_row(0.5 * (grid[j] + grid[j + 1]))));
      for (const auto& c : forcing) fp.push_back(c.piece_for_step(grid[j], grid[j + 1]));
    }
    auto dk = [&](int q, const Vec& dX) {
      Vec r = K.jacobian(s, st.t[q], st.X[q]) * dX;
      if (forced) {
        for (std::size_t i = 0; i < forcing.size(); ++i) {
          const double d = da[static_cast<Eigen::Index>(i)];
          if (d == 0.0) continue;
          dyn.rhs_into(st.t[q], st.X[q], forcing[i].in_piece(fp[i], st.t[q]), tmp);
          r += d * tmp;
        }
      }
      return r;
    };
    const double dt = s.h;
    const Vec d1 = dk(0, h);
    const Vec d2 = dk(1, h + (0.5 * dt) * d1);
    const Vec d3 = dk(2, h + (0.5 * dt) * d2);
    const Vec d4 = dk(3, h + dt * d3);
    h += (dt / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
    if (!h.allFinite()) throw IntegrationError("non-finite variation", j + 1, grid[j + 1]);
    out.values.row(static_cast<Eigen::Index>(j + 1)) = h.transpose();
  }
  return out;
}

AdjointArc integrate_adjoint(const ControlProblem& prob, const RelaxedControl& rc,
                             const Trajectory& base, const RowVec& p_terminal) {
  const auto& dyn = prob.dynamics();
  const int n = dyn.n();
  const TimeGrid& grid = base.grid;
  check_base(grid, base, n);
  if (p_terminal.size() != n) throw ModelError("terminal costate has wrong dimension");
  const std::size_t m = grid.size();
  AdjointArc out{grid, Mat(static_cast<Eigen::Index>(m), n)};
  Kernel K(dyn, rc);
  RowVec p = p_terminal;
  out.values.row(static_cast<Eigen::Index>(m - 1)) = p;

  for (std::size_t j = m - 1; j-- > 0;) {
    const Step s = make_step(rc, grid[j], grid[j + 1]);
    const Stages st = stages(K, s, base.at(j));
    const double dt = s.h;
    Mat A[4];
    for (int q = 0; q < 4; ++q) A[q] = K.jacobian(s, st.t[q], st.X[q]);
    // Reverse sweep through h_{j+1} = h_j + dt/6 (d1 + 2 d2 + 2 d3 + d4).
    RowVec bar_h = p;
    RowVec bar_d4 = p * (dt / 6.0), bar_d3 = p * (dt / 3.0), bar_d2 = p * (dt / 3.0),
           bar_d1 = p * (dt / 6.0);
    const RowVec bX4 = bar_d4 * A[3];
    bar_h += bX4;
    bar_d3 += dt * bX4;
    const RowVec bX3 = bar_d3 * A[2];
    bar_h += bX3;
    bar_d2 += (0.5 * dt) * bX3;
    const RowVec bX2 = bar_d2 * A[1];
    bar_h += bX2;
    bar_d1 += (0.5 * dt) * bX2;
    bar_h += bar_d1 * A[0];
    p = bar_h;
    if (!p.allFinite()) throw IntegrationError("non-finite costate", j, grid[j]);
    out.values.row(static_cast<Eigen::Index>(j)) = p;
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj, const std::string& prefix) {
  std::ostringstream os;
  os << "t";
  for (int i = 1; i <= traj.n(); ++i) os << ',' << prefix << i;
  os << "\r\n";
  char buf[40];
  for (std::size_t r = 0; r < traj.grid.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.grid[r]);
    os << buf;
    for (int c = 0; c < traj.n(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", traj.values(static_cast<Eigen::Index>(r), c));
      os << ',' << buf;
    }
    os << "\r\n";
  }
  return os.str();
}

}  // namespace relaxoc
