#include "relaxoc/relax.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace relaxoc {

Vec ConvexExtension::stack(const std::vector<Vec>& controls, const RowVec& alpha) const {
  if (static_cast<int>(controls.size()) != k || alpha.size() != k)
    throw ModelError("convex extension: expected k controls and k weights");
  Vec out(k * r + k);
  for (int i = 0; i < k; ++i) {
    out.segment(i * r, r) = controls[static_cast<std::size_t>(i)];
    out[k * r + i] = alpha[i];
  }
  return out;
}

std::string ConvexExtension::describe() const {
  std::ostringstream os;
  os << "convex extension, k=" << k << ", controls u1..u" << k * r << " then weights u"
     << k * r + 1 << "..u" << k * r + k << " on the simplex\n";
  for (int i = 0; i < dynamics.n(); ++i)
    os << "  x" << i + 1 << "' = " << dynamics.phi()[static_cast<std::size_t>(i)].str() << "\n";
  return os.str();
}

ConvexExtension convexify(const ControlProblem& prob, int k) {
  if (k < 1) throw ModelError("convexify: k must be at least 1");
  const auto& dyn = prob.dynamics();
  ConvexExtension ext;
  ext.k = k;
  ext.r = dyn.r();
  if (k == 1) {
    // With one slot the weight is identically 1; keep the original system.
    ext.dynamics = dyn;
    return ext;
  }
  std::vector<Expr> phi;
  for (int row = 0; row < dyn.n(); ++row) {
    Expr sum;
    for (int i = 0; i < k; ++i) {
      const int offset = i * ext.r;
      Expr term = substitute(dyn.phi()[static_cast<std::size_t>(row)],
                             [offset](Variable v) -> std::optional<Expr> {
                               if (v.kind != VarKind::Control) return std::nullopt;
                               return Expr::variable({VarKind::Control, v.index + offset});
                             });
      sum = sum + Expr::variable({VarKind::Control, ext.weight_index(i)}) * term;
    }
    phi.push_back(sum);
  }
  ext.dynamics = DynamicsModel(dyn.n(), k * ext.r + k, std::move(phi));
  return ext;
}

// ------------------------------------------------------------ admissibility

double AdmissibilityReport::worst() const {
  return std::max({ode_residual, ineq_violation, eq_violation, set_violation});
}

namespace {

/// Nodes where some positively weighted component control or the weight
/// row changes. The trajectory has a kink there.
std::vector<bool> kink_nodes(const TimeGrid& g, const RelaxedControl& rc) {
  const double eps = 1e-12 * (g.t1() - g.t0());
  std::vector<bool> kink(g.size(), false);
  for (const auto& c : rc.controls())
    for (double bp : c.interior_breakpoints()) {
      const std::size_t q = g.nearest(bp);
      if (std::fabs(g[q] - bp) <= eps) kink[q] = true;
    }
  const TimeGrid& wg = rc.grid();
  for (std::size_t q = 1; q + 1 < wg.size(); ++q) {
    if (rc.weights().row(static_cast<Eigen::Index>(q)) ==
        rc.weights().row(static_cast<Eigen::Index>(q - 1)))
      continue;
    const std::size_t i = g.nearest(wg[q]);
    if (std::fabs(g[i] - wg[q]) <= eps) kink[i] = true;
  }
  return kink;
}

/// Difference quotient at node i. Central 3-point at smooth interior nodes;
/// at kinks and at t1 the backward (left) quotient, matching left-continuous
/// controls; at t0 the forward one. One-sided quotients use 3 points when
/// the neighbouring node is smooth, otherwise 2.
Vec derivative_at(const Trajectory& tr, std::size_t i, const std::vector<bool>& kink) {
  const auto& g = tr.grid;
  const std::size_t m = g.size();
  auto two = [&](std::size_t a, std::size_t b) { return Vec((tr.at(b) - tr.at(a)) / (g[b] - g[a])); };
  if (i == 0) {
    if (m == 2 || kink[1]) return two(0, 1);
    const double h1 = g[1] - g[0], h2 = g[2] - g[1];
    return -(2 * h1 + h2) / (h1 * (h1 + h2)) * tr.at(0) + (h1 + h2) / (h1 * h2) * tr.at(1) -
           h1 / (h2 * (h1 + h2)) * tr.at(2);
  }
  if (i == m - 1 || kink[i]) {
    if (i < 2 || kink[i - 1]) return two(i - 1, i);
    const double h1 = g[i - 1] - g[i - 2], h2 = g[i] - g[i - 1];
    return h2 / (h1 * (h1 + h2)) * tr.at(i - 2) - (h1 + h2) / (h1 * h2) * tr.at(i - 1) +
           (2 * h2 + h1) / (h2 * (h1 + h2)) * tr.at(i);
  }
  const double h1 = g[i] - g[i - 1], h2 = g[i + 1] - g[i];
  return -h2 / (h1 * (h1 + h2)) * tr.at(i - 1) + (h2 - h1) / (h1 * h2) * tr.at(i) +
         h1 / (h2 * (h1 + h2)) * tr.at(i + 1);
}

void endpoint_violations(const ControlProblem& prob, const Trajectory& traj,
                         AdmissibilityReport& rep) {
  const Vec y = traj.initial(), z = traj.terminal();
  const auto& ep = prob.endpoints();
  if (ep.m1() > 0) rep.ineq_violation = std::max(0.0, ep.eval_f(y, z).value.maxCoeff());
  if (ep.m2() > 0) rep.eq_violation = ep.eval_g(y, z).value.norm();
}

}  // namespace

AdmissibilityReport admissibility(const ControlProblem& prob, const Trajectory& traj,
                                  const RelaxedControl& rc) {
  if (traj.n() != prob.n()) throw ModelError("admissibility: trajectory has wrong dimension");
  AdmissibilityReport rep;
  const auto kink = kink_nodes(traj.grid, rc);
  for (std::size_t i = 0; i < traj.grid.size(); ++i) {
    const double t = traj.grid[i];
    const Vec d = derivative_at(traj, i, kink) - relaxed_rhs(prob, rc, t, traj.at(i));
    rep.ode_residual = std::max(rep.ode_residual, d.lpNorm<Eigen::Infinity>());
    const RowVec w = rc.weights_at(t);
    for (int c = 0; c < rc.k(); ++c)
      if (w[c] > 0.0)
        rep.set_violation = std::max(
            rep.set_violation, prob.U().project(rc.controls()[static_cast<std::size_t>(c)](t)).distance);
  }
  endpoint_violations(prob, traj, rep);
  return rep;
}

AdmissibilityReport admissibility(const ControlProblem& prob, const Trajectory& traj,
                                  const PiecewiseControl& u) {
  return admissibility(prob, traj, RelaxedControl::single(u, traj.grid));
}

// ------------------------------------------------------------------ growth

GrowthCheckReport check_growth(const ControlProblem& prob, double K, const GrowthSampleSpec& spec) {
  const auto& U = prob.U();
  const auto& dyn = prob.dynamics();
  const int n = dyn.n(), r = dyn.r();
  if (!U.bounded() && !spec.window)
    throw ModelError("growth check: U is unbounded and no sampling window was given");
  if (!(spec.radius > 0.0) || spec.x_samples < 1)
    throw ModelError("growth check: radius and sample counts must be positive");

  std::vector<Interval> pieces;
  Vec lo, hi;
  if (U.kind() == ControlSet::Kind::IntervalUnion) {
    pieces = U.clipped(spec.window.value_or(std::numeric_limits<double>::infinity()));
  } else if (U.kind() == ControlSet::Kind::Box) {
    lo = U.lower();
    hi = U.upper();
    if (spec.window)
      for (int j = 0; j < r; ++j) {
        lo[j] = std::max(lo[j], -*spec.window);
        hi[j] = std::min(hi[j], *spec.window);
      }
  }

  // Deterministic candidates independent of the random stream.
  std::vector<Vec> fixed;
  if (U.kind() == ControlSet::Kind::Finite) {
    fixed = U.points();
  } else if (U.kind() == ControlSet::Kind::Box) {
    for (int mask = 0; mask < (1 << r); ++mask) {
      Vec v(r);
      for (int j = 0; j < r; ++j) v[j] = (mask >> j & 1) ? hi[j] : lo[j];
      fixed.push_back(v);
    }
  } else {
    for (const auto& iv : pieces) {
      fixed.push_back(Vec::Constant(1, iv.lo));
      if (iv.hi != iv.lo) fixed.push_back(Vec::Constant(1, iv.hi));
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  GrowthCheckReport rep;
  rep.K_input = K;
  rep.witness_x = Vec::Zero(n);
  rep.witness_u = fixed.empty() ? Vec::Zero(r) : fixed.front();
  Vec x(n), u(r), f(n);
  auto consider = [&](double t) {
    dyn.rhs_into(t, x, u, f);
    const double ratio = std::fabs(x.dot(f)) / (x.squaredNorm() + 1.0);
    ++rep.samples;
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.witness_t = t;
      rep.witness_x = x;
      rep.witness_u = u;
    }
  };

  double total_len = 0.0;
  for (const auto& iv : pieces) total_len += iv.hi - iv.lo;

  for (int s = 0; s < spec.x_samples; ++s) {
    // Uniform in the ball: Gaussian direction, radius R * U^(1/n).
    for (int i = 0; i < n; ++i) x[i] = gauss(rng);
    const double norm = x.norm();
    const double rad = spec.radius * std::pow(unit(rng), 1.0 / n);
    x *= norm > 0.0 ? rad / norm : 0.0;
    for (int q = 0; q < spec.t_samples; ++q) {
      const double t = prob.t0() + (prob.t1() - prob.t0()) * unit(rng);
      for (const auto& v : fixed) {
        u = v;
        consider(t);
      }
      if (U.kind() == ControlSet::Kind::Finite) continue;
      for (int c = 0; c < spec.u_samples; ++c) {
        if (U.kind() == ControlSet::Kind::Box) {
          for (int j = 0; j < r; ++j) u[j] = lo[j] + (hi[j] - lo[j]) * unit(rng);
        } else {
          // Length-weighted choice of an interval, then uniform inside it.
          double pos = total_len * unit(rng);
          std::size_t k = 0;
          while (k + 1 < pieces.size() && pos > pieces[k].hi - pieces[k].lo) {
            pos -= pieces[k].hi - pieces[k].lo;
            ++k;
          }
          u[0] = std::min(pieces[k].lo + pos, pieces[k].hi);
        }
        consider(t);
      }
    }
  }
  rep.passed = rep.max_ratio <= K;
  std::ostringstream os;
  os << (rep.passed ? "not falsified up to samples" : "falsified") << " (max ratio "
     << rep.max_ratio << " vs K=" << K << ", " << rep.samples << " samples)";
  rep.verdict = os.str();
  return rep;
}

// ------------------------------------------------------------- Caratheodory

CaratheodoryResult caratheodory_reduce(const std::vector<Vec>& points, const Vec& weights) {
  if (points.empty() || static_cast<Eigen::Index>(points.size()) != weights.size())
    throw ModelError("caratheodory: need one weight per point");
  const Eigen::Index n = points.front().size();
  for (const auto& p : points)
    if (p.size() != n) throw ModelError("caratheodory: points have different dimensions");
  if ((weights.array() < 0.0).any() || std::fabs(weights.sum() - 1.0) > 1e-9)
    throw ModelError("caratheodory: weights must lie on the simplex");

  CaratheodoryResult res;
  res.weights = weights;
  std::vector<int> active;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights[i] > 0.0) active.push_back(static_cast<int>(i));

  while (static_cast<Eigen::Index>(active.size()) > n + 1) {
    const auto a = static_cast<Eigen::Index>(active.size());
    Mat M(n + 1, a);
    for (Eigen::Index j = 0; j < a; ++j) {
      M.col(j).head(n) = points[static_cast<std::size_t>(active[static_cast<std::size_t>(j)])];
      M(n, j) = 1.0;
    }
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    // The smallest retained singular value measures how close the active
    // points come to a lower-dimensional affine configuration.
    const double smin = sv[sv.size() - 1];
    const double cond = smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
    res.max_condition = std::max(res.max_condition, cond);
    if (cond > 1e12) res.degenerate = true;
    Vec c = svd.matrixV().col(a - 1);
    if (c.maxCoeff() <= 0.0) c = -c;

    Eigen::Index pivot = -1;
    double theta = 0.0;
    for (Eigen::Index j = 0; j < a; ++j) {
      if (c[j] <= 0.0) continue;
      const double ratio = res.weights[active[static_cast<std::size_t>(j)]] / c[j];
      if (pivot < 0 || ratio < theta) {
        pivot = j;
        theta = ratio;
      }
    }
    for (Eigen::Index j = 0; j < a; ++j) {
      double& w = res.weights[active[static_cast<std::size_t>(j)]];
      w = j == pivot ? 0.0 : std::max(0.0, w - theta * c[j]);
    }
    std::vector<int> next;
    for (int idx : active)
      if (res.weights[idx] > 0.0) next.push_back(idx);
    active.swap(next);
    ++res.iterations;
  }
  const double s = res.weights.sum();
  res.weights /= s;
  res.support = active;
  return res;
}

}  // namespace relaxoc
