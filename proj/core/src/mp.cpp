#include "relaxoc/mp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "relaxoc/lp.hpp"
#include "relaxoc/relax.hpp"

namespace relaxoc {

double MultiplierTuple::l1() const {
  return std::fabs(lambda0) + lambda_f.lpNorm<1>() + lambda_g.lpNorm<1>();
}

Vec MultiplierTuple::stacked() const {
  Vec v(1 + lambda_f.size() + lambda_g.size());
  v << lambda0, lambda_f, lambda_g;
  return v;
}

MultiplierTuple MultiplierTuple::scaled(double c) const {
  MultiplierTuple m = *this;
  m.lambda0 *= c;
  m.lambda_f *= c;
  m.lambda_g *= c;
  m.normalized = false;
  return m;
}

double ConditionResiduals::worst() const {
  return std::max({stationarity, transversality_t0, transversality_t1, slackness,
                   maximum_condition});
}

double hamiltonian(const ControlProblem& prob, const RowVec& p, double t, const Vec& x,
                   const Vec& u) {
  return p.dot(prob.dynamics().rhs(t, x, u).transpose());
}

// ----------------------------------------------------------- maximization

HamiltonianMax maximize_hamiltonian(const ControlProblem& prob, const RowVec& p, double t,
                                    const Vec& x, const MpOptions& opts) {
  const auto& U = prob.U();
  const auto& dyn = prob.dynamics();
  HamiltonianMax best;
  bool have = false;
  auto offer = [&](const Vec& u, double h) {
    if (!have || h > best.value) {
      best.u_star = u;
      best.value = h;
      have = true;
    }
  };

  if (U.kind() == ControlSet::Kind::Finite) {
    for (const auto& u : U.points()) offer(u, hamiltonian(prob, p, t, x, u));
    return best;
  }
  if (dyn.r() != 1) throw ModelError("maximize_hamiltonian: interval sets need scalar controls");

  const double W = opts.window;
  std::vector<Interval> pieces = U.clipped(W);
  if (pieces.empty()) throw ModelError("maximize_hamiltonian: U does not meet the window");
  Vec u(1);
  auto H = [&](double v) {
    u[0] = v;
    return hamiltonian(prob, p, t, x, u);
  };
  for (const auto& iv : pieces) {
    const int ns = iv.hi > iv.lo ? std::max(2, opts.seeds) : 1;
    std::vector<double> us(static_cast<std::size_t>(ns)), hs(static_cast<std::size_t>(ns));
    for (int i = 0; i < ns; ++i) {
      us[static_cast<std::size_t>(i)] =
          ns == 1 ? iv.lo : (i + 1 == ns ? iv.hi : iv.lo + (iv.hi - iv.lo) * i / (ns - 1));
      hs[static_cast<std::size_t>(i)] = H(us[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < ns; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      double cand = us[ii], hc = hs[ii];
      const bool local = (i == 0 || hs[ii] >= hs[ii - 1]) && (i + 1 == ns || hs[ii] >= hs[ii + 1]);
      if (local && ns > 1) {
        // Newton on dH/du from the seed, kept inside the piece.
        double v = cand;
        for (int it = 0; it < 40; ++it) {
          u[0] = v;
          const double g = p.dot(dyn.jacobian_u(t, x, u).col(0).transpose());
          const double c = p.dot(dyn.second_u(t, x, u).transpose());
          if (!(c < 0.0) || !std::isfinite(g)) break;
          const double next = std::clamp(v - g / c, iv.lo, iv.hi);
          const bool done = std::fabs(next - v) <= 1e-15 * (1.0 + std::fabs(v));
          v = next;
          if (done) break;
        }
        const double hv = H(v);
        if (hv > hc) {
          cand = v;
          hc = hv;
        }
      }
      u[0] = cand;
      offer(u, hc);
    }
  }
  // Flag argmax on an edge that the window introduced.
  const double us = best.u_star[0];
  std::vector<Interval> full = U.intervals();
  if (U.kind() == ControlSet::Kind::Box) full = {{U.lower()[0], U.upper()[0]}};
  for (const auto& iv : full) {
    if ((us == W && iv.hi > W && iv.lo <= W) || (us == -W && iv.lo < -W && iv.hi >= -W))
      best.boundary_flag = true;
  }
  if (best.boundary_flag && opts.strict) {
    std::ostringstream os;
    os << "Hamiltonian argmax on the window edge u=" << us << " at t=" << t;
    throw WindowBoundaryError(os.str());
  }
  return best;
}

// -------------------------------------------------------------- residuals

namespace {

/// Endpoint Jacobians stacked as rows (f0, f_1..f_m1, g_1..g_m2).
struct EndpointJacobians {
  Mat J1, J2;
  Vec f_value;
  int m1 = 0, m2 = 0;
  Eigen::Index rows() const { return J1.rows(); }
};

EndpointJacobians endpoint_jacobians(const ControlProblem& prob, const Vec& y, const Vec& z) {
  const auto& ep = prob.endpoints();
  const int n = prob.n();
  EndpointJacobians e;
  e.m1 = ep.m1();
  e.m2 = ep.m2();
  const Eigen::Index L = 1 + e.m1 + e.m2;
  e.J1.resize(L, n);
  e.J2.resize(L, n);
  const auto f0 = ep.eval_f0(y, z);
  e.J1.row(0) = f0.d_initial.row(0);
  e.J2.row(0) = f0.d_terminal.row(0);
  if (e.m1 > 0) {
    const auto f = ep.eval_f(y, z);
    e.J1.middleRows(1, e.m1) = f.d_initial;
    e.J2.middleRows(1, e.m1) = f.d_terminal;
    e.f_value = f.value;
  }
  if (e.m2 > 0) {
    const auto g = ep.eval_g(y, z);
    e.J1.bottomRows(e.m2) = g.d_initial;
    e.J2.bottomRows(e.m2) = g.d_terminal;
  }
  return e;
}

/// Weighted Jacobian sum_i w_i phi_x on the step [a, b], evaluated at t.
Mat step_jacobian(const ControlProblem& prob, const RelaxedControl& rc, double a, double b,
                  double t, const Vec& x) {
  const RowVec w = rc.weights_at(0.5 * (a + b));
  Mat A = Mat::Zero(prob.n(), prob.n());
  for (int i = 0; i < rc.k(); ++i) {
    if (w[i] == 0.0) continue;
    const auto& c = rc.controls()[static_cast<std::size_t>(i)];
    A += w[i] * prob.dynamics().jacobian_x(t, x, c.in_piece(c.piece_for_step(a, b), t));
  }
  return A;
}

}  // namespace

ConditionResiduals condition_residuals(const ControlProblem& prob, const Triple& triple,
                                       const MultiplierTuple& mult, const MpOptions& opts) {
  const auto& ep = prob.endpoints();
  if (mult.lambda_f.size() != ep.m1() || mult.lambda_g.size() != ep.m2())
    throw ModelError("multiplier tuple has wrong dimensions");
  if (mult.is_zero()) throw ModelError("multiplier tuple must be nonzero");
  if (mult.lambda0 < 0.0 || (mult.lambda_f.array() < 0.0).any())
    throw ModelError("multiplier tuple violates sign constraints");
  const auto adm = admissibility(prob, triple.x, triple.rc);
  if (!adm.admissible(opts.tol_adm)) {
    std::ostringstream os;
    os << "triple is not relaxed-admissible (worst residual " << adm.worst() << ")";
    throw ModelError(os.str());
  }

  const Trajectory& x = triple.x;
  const TimeGrid& grid = x.grid;
  const auto J = endpoint_jacobians(prob, x.initial(), x.terminal());
  const Vec lam = mult.stacked();
  const RowVec p1 = -(lam.transpose() * J.J2);

  ConditionResiduals res;
  res.p = integrate_adjoint(prob, triple.rc, x, p1);
  res.transversality_t0 = (res.p.at(0) - lam.transpose() * J.J1).norm();
  res.transversality_t1 = (res.p.at(grid.size() - 1) - p1).norm();
  if (J.m1 > 0) res.slackness = std::fabs(mult.lambda_f.dot(J.f_value));

  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double a = grid[i], b = grid[i + 1], h = b - a;
    const RowVec pa = res.p.at(i), pb = res.p.at(i + 1);
    const RowVec lhs = (pb - pa) / h;
    const RowVec rhs = -0.5 * (pa * step_jacobian(prob, triple.rc, a, b, a, x.at(i)) +
                               pb * step_jacobian(prob, triple.rc, a, b, b, x.at(i + 1)));
    res.stationarity = std::max(res.stationarity, (lhs - rhs).lpNorm<Eigen::Infinity>());
  }

  MpOptions mo = opts;
  mo.strict = false;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const Vec xi = x.at(i);
    const RowVec p = res.p.at(i);
    const auto hm = maximize_hamiltonian(prob, p, t, xi, mo);
    res.boundary_flag = res.boundary_flag || hm.boundary_flag;
    const double d = hm.value - p.dot(relaxed_rhs(prob, triple.rc, t, xi).transpose());
    worst = std::max(worst, d);
  }
  res.maximum_condition_signed = worst;
  res.maximum_condition = std::max(0.0, worst);
  return res;
}

// ------------------------------------------------------------ LP search

namespace {

struct Pool {
  Mat G;                          // L x P coefficient columns J2 P(t_i) v
  std::vector<std::size_t> node;  // node of each column
  std::vector<std::vector<Eigen::Index>> by_node;
};

void add_column(Pool& pool, const Vec& g, std::size_t node) {
  const Eigen::Index c = pool.G.cols();
  pool.G.conservativeResize(pool.G.rows(), c + 1);
  pool.G.col(c) = g;
  pool.node.push_back(node);
  pool.by_node[node].push_back(c);
}

}  // namespace

MultiplierSearch find_multipliers(const ControlProblem& prob, const Triple& triple,
                                  Lambda0Mode mode, const MpOptions& opts) {
  MultiplierSearch out;
  const auto& ep = prob.endpoints();
  const int n = prob.n(), m1 = ep.m1(), m2 = ep.m2();
  if (m2 > 12) throw ModelError("find_multipliers: too many equality constraints for sign search");
  const bool free0 = mode == Lambda0Mode::Free;
  const int nl = (free0 ? 1 : 0) + m1 + m2;
  if (nl == 0) return out;

  const auto adm = admissibility(prob, triple.x, triple.rc);
  if (!adm.admissible(opts.tol_adm)) throw ModelError("find_multipliers: triple is not admissible");

  const Trajectory& x = triple.x;
  const TimeGrid& grid = x.grid;
  const std::size_t m = grid.size();
  const auto J = endpoint_jacobians(prob, x.initial(), x.terminal());
  const Eigen::Index L = J.rows();

  // Costate basis: p(t_i) = p(t1) P[i].
  std::vector<Mat> P(m, Mat(n, n));
  for (int k = 0; k < n; ++k) {
    const auto arc = integrate_adjoint(prob, triple.rc, x, RowVec::Unit(n, k));
    for (std::size_t i = 0; i < m; ++i) P[i].row(k) = arc.at(i);
  }
  std::vector<Mat> C(m);
  for (std::size_t i = 0; i < m; ++i) C[i] = J.J2 * P[i];  // L x n
  const Mat T0 = -C[0] - J.J1;                              // transversality at t0

  std::vector<Vec> xdot(m);
  for (std::size_t i = 0; i < m; ++i) xdot[i] = relaxed_rhs(prob, triple.rc, grid[i], x.at(i));

  // Candidate control pool per node.
  const auto& U = prob.U();
  Pool pool;
  pool.G.resize(L, 0);
  pool.by_node.resize(m);
  {
    std::vector<Vec> base_candidates;
    if (U.kind() == ControlSet::Kind::Finite) {
      base_candidates = U.points();
    } else {
      if (prob.r() != 1) throw ModelError("find_multipliers: interval sets need scalar controls");
      for (const auto& iv : U.clipped(opts.window)) {
        const int ns = iv.hi > iv.lo ? std::max(2, opts.seeds) : 1;
        for (int i = 0; i < ns; ++i)
          base_candidates.push_back(Vec::Constant(
              1, ns == 1 ? iv.lo : (i + 1 == ns ? iv.hi : iv.lo + (iv.hi - iv.lo) * i / (ns - 1))));
      }
    }
    std::vector<Vec> cols;
    Mat block;
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<Vec> cand = base_candidates;
      if (U.kind() != ControlSet::Kind::Finite) {
        const RowVec w = triple.rc.weights_at(grid[i]);
        for (int c = 0; c < triple.rc.k(); ++c)
          if (w[c] > 0.0) cand.push_back(triple.rc.controls()[static_cast<std::size_t>(c)](grid[i]));
      }
      block.resize(n, static_cast<Eigen::Index>(cand.size()));
      for (std::size_t c = 0; c < cand.size(); ++c)
        block.col(static_cast<Eigen::Index>(c)) = xdot[i] - prob.dynamics().rhs(grid[i], x.at(i), cand[c]);
      const Mat g = C[i] * block;
      const Eigen::Index c0 = pool.G.cols();
      pool.G.conservativeResize(L, c0 + g.cols());
      pool.G.middleCols(c0, g.cols()) = g;
      for (Eigen::Index c = 0; c < g.cols(); ++c) {
        pool.node.push_back(i);
        pool.by_node[i].push_back(c0 + c);
      }
    }
  }

  // Map from LP variables to the stacked tuple for a sign pattern.
  std::vector<Eigen::Index> var_entry;
  if (free0) var_entry.push_back(0);
  for (int i = 0; i < m1; ++i) var_entry.push_back(1 + i);
  for (int i = 0; i < m2; ++i) var_entry.push_back(1 + m1 + i);

  const double cap = 1e6;
  const std::size_t stride = std::max<std::size_t>(1, m / 32);

  for (int mask = 0; mask < (1 << m2); ++mask) {
    Vec sign = Vec::Ones(L);
    for (int i = 0; i < m2; ++i)
      if (mask >> i & 1) sign[1 + m1 + i] = -1.0;
    // S maps LP variables (nl) to the stacked tuple (L).
    Mat S = Mat::Zero(L, nl);
    for (int v = 0; v < nl; ++v) S(var_entry[static_cast<std::size_t>(v)], v) = sign[var_entry[static_cast<std::size_t>(v)]];

    LinearProgram lp;
    lp.c = Vec::Zero(nl + 1);
    lp.c[nl] = 1.0;
    lp.free.assign(static_cast<std::size_t>(nl + 1), false);
    lp.free.back() = true;
    std::vector<RowVec> eq_rows;
    std::vector<double> eq_rhs;
    const Mat T0s = T0.transpose() * S;  // n x nl
    for (int r = 0; r < n; ++r) {
      RowVec row = RowVec::Zero(nl + 1);
      row.head(nl) = T0s.row(r);
      if (row.lpNorm<Eigen::Infinity>() > 0.0) {
        eq_rows.push_back(row);
        eq_rhs.push_back(0.0);
      }
    }
    if (m1 > 0) {
      RowVec row = RowVec::Zero(nl + 1);
      for (int i = 0; i < m1; ++i) row[(free0 ? 1 : 0) + i] = J.f_value[i];
      if (row.lpNorm<Eigen::Infinity>() > 0.0) {
        eq_rows.push_back(row);
        eq_rhs.push_back(0.0);
      }
    }
    {
      RowVec row = RowVec::Zero(nl + 1);
      row.head(nl).setOnes();
      eq_rows.push_back(row);
      eq_rhs.push_back(1.0);
    }
    lp.A_eq.resize(static_cast<Eigen::Index>(eq_rows.size()), nl + 1);
    lp.b_eq.resize(static_cast<Eigen::Index>(eq_rows.size()));
    for (std::size_t r = 0; r < eq_rows.size(); ++r) {
      lp.A_eq.row(static_cast<Eigen::Index>(r)) = eq_rows[r];
      lp.b_eq[static_cast<Eigen::Index>(r)] = eq_rhs[r];
    }

    std::vector<Eigen::Index> active;
    std::vector<bool> in_active(static_cast<std::size_t>(pool.G.cols()), false);
    auto activate = [&](Eigen::Index c) {
      if (static_cast<std::size_t>(c) >= in_active.size()) in_active.resize(static_cast<std::size_t>(c) + 1, false);
      if (in_active[static_cast<std::size_t>(c)]) return;
      in_active[static_cast<std::size_t>(c)] = true;
      active.push_back(c);
    };
    for (std::size_t i = 0; i < m; i += stride) {
      // Start from the most binding candidate at lambda = uniform.
      const Vec lam0 = S * Vec::Constant(nl, 1.0 / nl);
      Eigen::Index bestc = -1;
      double bests = 0.0;
      for (Eigen::Index c : pool.by_node[i]) {
        const double s = -lam0.dot(pool.G.col(c));
        if (bestc < 0 || s < bests) {
          bestc = c;
          bests = s;
        }
      }
      if (bestc >= 0) activate(bestc);
    }

    LpResult sol;
    bool feasible = true;
    double tau = 0.0;
    Vec lam_full;
    for (int round = 0; round < opts.max_cut_rounds; ++round) {
      lp.A_le.resize(static_cast<Eigen::Index>(active.size()) + 1, nl + 1);
      lp.b_le = Vec::Zero(lp.A_le.rows());
      lp.A_le.row(0).setZero();
      lp.A_le(0, nl) = 1.0;
      lp.b_le[0] = cap;
      for (std::size_t r = 0; r < active.size(); ++r) {
        auto row = lp.A_le.row(static_cast<Eigen::Index>(r) + 1);
        row.head(nl) = (S.transpose() * pool.G.col(active[r])).transpose();
        row[nl] = 1.0;
      }
      sol = solve_lp(lp);
      ++out.lp_solves;
      out.degenerate = out.degenerate || sol.degenerate;
      if (sol.status != LpStatus::Optimal) {
        feasible = false;
        break;
      }
      tau = sol.x[nl];
      lam_full = S * sol.x.head(nl);

      // Most violated candidate per node.
      const RowVec slack = -(lam_full.transpose() * pool.G);
      std::vector<std::pair<double, Eigen::Index>> viol;
      const double thresh = tau - 1e-12 * (1.0 + std::fabs(tau));
      for (std::size_t i = 0; i < m; ++i) {
        Eigen::Index worst_c = -1;
        double worst_s = thresh;
        for (Eigen::Index c : pool.by_node[i])
          if (slack[c] < worst_s && !in_active[static_cast<std::size_t>(c)]) {
            worst_s = slack[c];
            worst_c = c;
          }
        if (worst_c >= 0) viol.emplace_back(worst_s, worst_c);
      }
      if (!viol.empty()) {
        std::sort(viol.begin(), viol.end());
        for (std::size_t q = 0; q < viol.size() && q < static_cast<std::size_t>(opts.cuts_per_round); ++q)
          activate(viol[q].second);
        continue;
      }
      // Pool exhausted. A margin this far below tolerance cannot recover.
      if (tau < -opts.tol) break;
      // Add exact Hamiltonian maximizers for the current costate.
      bool added = false;
      MpOptions mo = opts;
      mo.strict = false;
      for (std::size_t i = 0; i < m; ++i) {
        const RowVec p = -(lam_full.transpose() * C[i]);
        const auto hm = maximize_hamiltonian(prob, p, grid[i], x.at(i), mo);
        const Vec v = xdot[i] - prob.dynamics().rhs(grid[i], x.at(i), hm.u_star);
        if (p.dot(v.transpose()) < thresh) {
          add_column(pool, C[i] * v, i);
          activate(pool.G.cols() - 1);
          added = true;
        }
      }
      if (!added) break;
    }
    if (!feasible) continue;
    out.best_margin = std::max(out.best_margin, tau);
    if (tau < -opts.tol) continue;

    MultiplierTuple t;
    t.normalized = true;
    t.lambda0 = lam_full[0];
    t.lambda_f = lam_full.segment(1, m1);
    t.lambda_g = lam_full.tail(m2);
    // Clean signed zeros from the orthant construction.
    for (Eigen::Index i = 0; i < t.lambda_g.size(); ++i)
      if (t.lambda_g[i] == 0.0) t.lambda_g[i] = 0.0;
    bool dup = false;
    for (const auto& f : out.found)
      if ((f.tuple.stacked() - t.stacked()).lpNorm<Eigen::Infinity>() <= 1e-9) dup = true;
    if (dup) continue;
    FoundMultiplier fm;
    fm.tuple = t;
    fm.margin = tau;
    fm.residuals = condition_residuals(prob, triple, t, opts);
    out.found.push_back(std::move(fm));
  }
  out.constraint_pool = static_cast<std::size_t>(pool.G.cols());

  std::sort(out.found.begin(), out.found.end(), [](const FoundMultiplier& a, const FoundMultiplier& b) {
    const Vec va = a.tuple.stacked(), vb = b.tuple.stacked();
    for (Eigen::Index i = 0; i < va.size(); ++i)
      if (va[i] != vb[i]) return va[i] > vb[i];
    return false;
  });
  return out;
}

RegularityVerdict regularity_check(const ControlProblem& prob, const Triple& triple,
                                   double tol_reg, MpOptions opts) {
  opts.tol = tol_reg;
  const auto search = find_multipliers(prob, triple, Lambda0Mode::Zero, opts);
  RegularityVerdict v;
  v.margin = search.best_margin;
  std::ostringstream os;
  if (search.found.empty()) {
    v.regular = true;
    os << "no multiplier with lambda0 = 0 found at tolerance " << tol_reg << " (best margin "
       << search.best_margin << " over " << search.constraint_pool << " sampled constraints)";
    v.certificate = os.str();
    v.annotation =
        "regular: the relaxed trajectory lies in the closure of the admissible trajectories";
  } else {
    v.regular = false;
    v.witness = search.found.front();
    os << "witness with lambda0 = 0, margin " << v.witness->margin;
    v.certificate = os.str();
    v.annotation = "not regular: closure membership is not implied";
  }
  return v;
}

}  // namespace relaxoc
