#include "relaxoc/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace relaxoc {

// ---------------------------------------------------------------------------
// ControlSet

ControlSet ControlSet::finite(std::vector<Vec> points) {
  if (points.empty()) throw ModelError("finite control set must be nonempty");
  const auto r = points.front().size();
  for (const auto& p : points) {
    if (p.size() != r) throw ModelError("finite control set: inconsistent point dimensions");
    if (!p.allFinite()) throw ModelError("finite control set: non-finite point");
  }
  ControlSet s;
  s.kind_ = Kind::Finite;
  s.dim_ = static_cast<int>(r);
  s.points_ = std::move(points);
  return s;
}

ControlSet ControlSet::interval_union(std::vector<Interval> intervals) {
  if (intervals.empty()) throw ModelError("interval union must be nonempty");
  for (const auto& iv : intervals)
    if (!(iv.lo <= iv.hi)) throw ModelError("interval union: empty or malformed interval");
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < intervals.size(); ++i)
    if (!(intervals[i - 1].hi < intervals[i].lo))
      throw ModelError("interval union: intervals must be pairwise disjoint");
  ControlSet s;
  s.kind_ = Kind::IntervalUnion;
  s.dim_ = 1;
  s.intervals_ = std::move(intervals);
  return s;
}

ControlSet ControlSet::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw ModelError("box: lower/upper dimension mismatch");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i])) throw ModelError("box: lower must not exceed upper");
  ControlSet s;
  s.kind_ = Kind::Box;
  s.dim_ = static_cast<int>(lower.size());
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

bool ControlSet::bounded() const {
  switch (kind_) {
    case Kind::Finite: return true;
    case Kind::Box: return lower_.allFinite() && upper_.allFinite();
    case Kind::IntervalUnion:
      return std::isfinite(intervals_.front().lo) && std::isfinite(intervals_.back().hi);
  }
  return false;
}

Projection ControlSet::project(const Vec& u) const {
  if (u.size() != dim_) throw ModelError("project: control dimension mismatch");
  switch (kind_) {
    case Kind::Finite: {
      std::size_t best = 0;
      double best_d = (points_[0] - u).norm();
      for (std::size_t i = 1; i < points_.size(); ++i) {
        const double d = (points_[i] - u).norm();
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      return {points_[best], best_d};
    }
    case Kind::IntervalUnion: {
      double best_p = 0.0, best_d = std::numeric_limits<double>::infinity();
      for (const auto& iv : intervals_) {
        const double p = std::clamp(u[0], iv.lo, iv.hi);
        const double d = std::fabs(u[0] - p);
        if (d < best_d) {
          best_d = d;
          best_p = p;
        }
      }
      Vec p(1);
      p[0] = best_p;
      return {p, best_d};
    }
    case Kind::Box: {
      Vec p = u.cwiseMax(lower_).cwiseMin(upper_);
      return {p, (p - u).norm()};
    }
  }
  return {u, 0.0};
}

std::vector<Interval> ControlSet::clipped(double window) const {
  std::vector<Interval> out;
  auto clip = [&](Interval iv) {
    iv.lo = std::max(iv.lo, -window);
    iv.hi = std::min(iv.hi, window);
    if (iv.lo <= iv.hi) out.push_back(iv);
  };
  switch (kind_) {
    case Kind::IntervalUnion:
      for (const auto& iv : intervals_) clip(iv);
      break;
    case Kind::Box:
      if (dim_ != 1) throw ModelError("clipped: box control sets must be scalar");
      clip({lower_[0], upper_[0]});
      break;
    case Kind::Finite:
      throw ModelError("clipped: finite control set has no intervals");
  }
  return out;
}

std::string ControlSet::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Finite:
      os << "finite{";
      for (std::size_t i = 0; i < points_.size(); ++i) {
        if (i) os << "; ";
        for (Eigen::Index j = 0; j < points_[i].size(); ++j) os << (j ? " " : "") << points_[i][j];
      }
      os << "}";
      break;
    case Kind::IntervalUnion:
      for (std::size_t i = 0; i < intervals_.size(); ++i)
        os << (i ? " U " : "") << "[" << intervals_[i].lo << ", " << intervals_[i].hi << "]";
      break;
    case Kind::Box:
      os << "box[";
      for (Eigen::Index j = 0; j < lower_.size(); ++j)
        os << (j ? ", " : "") << lower_[j] << ".." << upper_[j];
      os << "]";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// DynamicsModel

DynamicsModel::DynamicsModel(int n, int r, std::vector<Expr> phi)
    : n_(n), r_(r), phi_(std::move(phi)) {
  if (n < 1 || r < 1) throw ModelError("dynamics: n and r must be positive");
  if (static_cast<int>(phi_.size()) != n)
    throw ModelError("dynamics: expected " + std::to_string(n) + " right-hand sides");
  for (const auto& e : phi_) {
    if (e.max_index(VarKind::State) > n || e.max_index(VarKind::Control) > r)
      throw ModelError("dynamics: variable index exceeds declared dimensions");
    if (e.references(VarKind::Initial) || e.references(VarKind::Terminal))
      throw ModelError("dynamics: endpoint variables are not allowed in phi");
  }
  phi_x_.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      phi_x_.push_back(differentiate(phi_[static_cast<std::size_t>(i)], {VarKind::State, j}));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < r; ++j)
      phi_u_.push_back(differentiate(phi_[static_cast<std::size_t>(i)], {VarKind::Control, j}));
  if (r == 1)
    for (int i = 0; i < n; ++i)
      phi_uu_.push_back(differentiate(phi_u(i, 0), {VarKind::Control, 0}));
}

void DynamicsModel::rhs_into(double t, const Vec& x, const Vec& u, Vec& out) const {
  const EvalPoint at{t, as_span(x), as_span(u), {}, {}};
  out.resize(n_);
  for (int i = 0; i < n_; ++i) out[i] = phi_[static_cast<std::size_t>(i)].eval(at);
}

Vec DynamicsModel::rhs(double t, const Vec& x, const Vec& u) const {
  Vec out(n_);
  rhs_into(t, x, u, out);
  return out;
}

Mat DynamicsModel::jacobian_x(double t, const Vec& x, const Vec& u) const {
  const EvalPoint at{t, as_span(x), as_span(u), {}, {}};
  Mat J(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) J(i, j) = phi_x_[idx(i, j)].eval(at);
  return J;
}

Mat DynamicsModel::jacobian_u(double t, const Vec& x, const Vec& u) const {
  const EvalPoint at{t, as_span(x), as_span(u), {}, {}};
  Mat J(n_, r_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < r_; ++j) J(i, j) = phi_u(i, j).eval(at);
  return J;
}

Vec DynamicsModel::second_u(double t, const Vec& x, const Vec& u) const {
  if (r_ != 1) throw ModelError("second_u: scalar controls only");
  const EvalPoint at{t, as_span(x), as_span(u), {}, {}};
  Vec out(n_);
  for (int i = 0; i < n_; ++i) out[i] = phi_uu_[static_cast<std::size_t>(i)].eval(at);
  return out;
}

// ---------------------------------------------------------------------------
// EndpointData

namespace {

void check_endpoint_expr(const Expr& e, int n) {
  if (e.references(VarKind::Time) || e.references(VarKind::State) ||
      e.references(VarKind::Control))
    throw ModelError("endpoint functions may only use y<i> and z<i>");
  if (e.max_index(VarKind::Initial) > n || e.max_index(VarKind::Terminal) > n)
    throw ModelError("endpoint function: variable index exceeds state dimension");
}

std::vector<Expr> endpoint_gradient(const Expr& e, int n) {
  std::vector<Expr> g;
  g.reserve(static_cast<std::size_t>(2 * n));
  for (int j = 0; j < n; ++j) g.push_back(differentiate(e, {VarKind::Initial, j}));
  for (int j = 0; j < n; ++j) g.push_back(differentiate(e, {VarKind::Terminal, j}));
  return g;
}

}  // namespace

EndpointData::EndpointData(int n, Expr f0, std::vector<Expr> f, std::vector<Expr> g)
    : n_(n), f0_(std::move(f0)), f_(std::move(f)), g_(std::move(g)) {
  check_endpoint_expr(f0_, n);
  f0_grad_.push_back(endpoint_gradient(f0_, n));
  for (const auto& e : f_) {
    check_endpoint_expr(e, n);
    f_grad_.push_back(endpoint_gradient(e, n));
  }
  for (const auto& e : g_) {
    check_endpoint_expr(e, n);
    g_grad_.push_back(endpoint_gradient(e, n));
  }
}

EndpointEval EndpointData::eval_rows(const std::vector<Expr>& rows,
                                     const std::vector<std::vector<Expr>>& grad,
                                     const Vec& y, const Vec& z) const {
  if (y.size() != n_ || z.size() != n_) throw ModelError("endpoint evaluation: dimension mismatch");
  const EvalPoint at{0.0, {}, {}, as_span(y), as_span(z)};
  const auto m = static_cast<Eigen::Index>(rows.size());
  EndpointEval out{Vec(m), Mat(m, n_), Mat(m, n_)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    out.value[i] = rows[ui].eval(at);
    for (int j = 0; j < n_; ++j) {
      out.d_initial(i, j) = grad[ui][static_cast<std::size_t>(j)].eval(at);
      out.d_terminal(i, j) = grad[ui][static_cast<std::size_t>(n_ + j)].eval(at);
    }
  }
  return out;
}

EndpointEval EndpointData::eval_f0(const Vec& y, const Vec& z) const {
  return eval_rows({f0_}, f0_grad_, y, z);
}
EndpointEval EndpointData::eval_f(const Vec& y, const Vec& z) const {
  return eval_rows(f_, f_grad_, y, z);
}
EndpointEval EndpointData::eval_g(const Vec& y, const Vec& z) const {
  return eval_rows(g_, g_grad_, y, z);
}

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid TimeGrid::uniform(double t0, double t1, int m) {
  if (m < 2) throw ModelError("time grid needs at least 2 nodes");
  if (!(t0 < t1)) throw ModelError("time grid requires t0 < t1");
  TimeGrid g;
  g.nodes_.resize(static_cast<std::size_t>(m));
  const double span = t1 - t0;
  for (int i = 0; i < m; ++i)
    g.nodes_[static_cast<std::size_t>(i)] = t0 + span * (static_cast<double>(i) / (m - 1));
  g.nodes_.back() = t1;
  g.uniform_ = true;
  return g;
}

TimeGrid TimeGrid::from_nodes(std::vector<double> nodes) {
  if (nodes.size() < 2) throw ModelError("time grid needs at least 2 nodes");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i - 1] < nodes[i])) throw ModelError("time grid nodes must be strictly increasing");
  TimeGrid g;
  g.nodes_ = std::move(nodes);
  const double h = (g.t1() - g.t0()) / static_cast<double>(g.nodes_.size() - 1);
  g.uniform_ = true;
  for (std::size_t i = 1; i < g.nodes_.size() && g.uniform_; ++i)
    g.uniform_ = std::fabs((g.nodes_[i] - g.nodes_[i - 1]) - h) <= 1e-12 * h;
  return g;
}

TimeGrid TimeGrid::refined(const std::vector<double>& breakpoints) const {
  const double eps = 1e-12 * (t1() - t0());
  std::vector<double> bps;
  for (double b : breakpoints)
    if (b > t0() + eps && b < t1() - eps) bps.push_back(b);
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end(), [&](double a, double b) { return b - a <= eps; }),
            bps.end());

  std::vector<double> merged;
  merged.reserve(nodes_.size() + bps.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double t = nodes_[i];
    while (j < bps.size() && bps[j] < t - eps) merged.push_back(bps[j++]);
    if (j < bps.size() && std::fabs(bps[j] - t) <= eps && i != 0 && i + 1 != nodes_.size()) {
      merged.push_back(bps[j++]);
      continue;
    }
    while (j < bps.size() && std::fabs(bps[j] - t) <= eps) ++j;  // coincides with an endpoint
    merged.push_back(t);
  }
  return from_nodes(std::move(merged));
}

std::size_t TimeGrid::interval_of(double t) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  std::size_t i = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
  return std::min(i, nodes_.size() - 2);
}

std::size_t TimeGrid::nearest(double t) const {
  const std::size_t i = interval_of(t);
  return std::fabs(nodes_[i + 1] - t) < std::fabs(t - nodes_[i]) ? i + 1 : i;
}

// ---------------------------------------------------------------------------
// ControlProblem

ControlProblem::ControlProblem(std::string name, DynamicsModel dynamics, Expr f0,
                               std::vector<Expr> f, std::vector<Expr> g, ControlSet U,
                               double t0, double t1, std::optional<Vec> x0)
    : name_(std::move(name)),
      dynamics_(std::move(dynamics)),
      U_(std::move(U)),
      t0_(t0),
      t1_(t1),
      x0_(std::move(x0)) {
  if (!(t0_ < t1_)) throw ModelError("control problem requires t0 < t1");
  if (U_.dim() != dynamics_.r()) throw ModelError("control set dimension differs from r");
  const int n = dynamics_.n();
  std::vector<Expr> rows;
  if (x0_) {
    if (x0_->size() != n) throw ModelError("x0 dimension differs from n");
    for (int i = 0; i < n; ++i)
      rows.push_back(Expr::variable({VarKind::Initial, i}) - Expr::constant((*x0_)[i]));
  }
  for (auto& e : g) rows.push_back(std::move(e));
  endpoints_ = EndpointData(n, std::move(f0), std::move(f), std::move(rows));
}

}  // namespace relaxoc
