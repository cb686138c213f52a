#include "relaxoc/correct.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relaxoc/chatter.hpp"
#include "relaxoc/io.hpp"

namespace relaxoc {

FrozenOperator::FrozenOperator(Mat A) : A_(std::move(A)) {
  if (A_.rows() == 0 || A_.cols() == 0) throw ModelError("frozen operator: empty matrix");
  if (A_.rows() > A_.cols())
    throw ModelError("frozen operator: more residuals (" + std::to_string(A_.rows()) +
                     ") than parameters (" + std::to_string(A_.cols()) + ")");
  if (!A_.allFinite()) throw ModelError("frozen operator: non-finite entry");
  cod_.compute(A_);
  if (cod_.rank() < A_.rows())
    throw ModelError("frozen operator: rank " + std::to_string(cod_.rank()) + " < " +
                     std::to_string(A_.rows()));
  const Mat pinv = cod_.pseudoInverse();
  const double scale = std::max(1.0, A_.cwiseAbs().maxCoeff());
  recon_error_ = (A_ * pinv * A_ - A_).cwiseAbs().maxCoeff() / scale;
  if (recon_error_ > 1e-10)
    throw ModelError("frozen operator: factorization error " + io::fmt17(recon_error_));
}

Vec FrozenOperator::solve(const Vec& F) const { return cod_.solve(F); }

const char* to_string(CorrectionStatus s) {
  switch (s) {
    case CorrectionStatus::Converged: return "converged";
    case CorrectionStatus::MaxIterations: return "max_iterations";
    case CorrectionStatus::Diverged: return "diverged";
    case CorrectionStatus::RankDeficient: return "rank_deficient";
  }
  return "unknown";
}

std::string CorrectionResult::trace_csv() const {
  std::vector<std::vector<double>> body;
  for (std::size_t i = 0; i < trace.size(); ++i) body.push_back({static_cast<double>(i), trace[i]});
  return io::csv({"iter", "residual_norm"}, body);
}

nlohmann::json CorrectionResult::to_json() const {
  nlohmann::json j;
  j["params"] = std::vector<double>(params.data(), params.data() + params.size());
  j["iterations"] = iterations;
  j["residual_norm"] = residual_norm;
  j["converged"] = converged;
  j["status"] = to_string(status);
  j["max_contraction"] = max_contraction;
  j["trace"] = trace;
  return j;
}

CorrectionResult modified_newton(const ResidualFn& F, const FrozenOperator& frozen, const Vec& x0,
                                 double tol, int max_iter) {
  if (x0.size() != frozen.cols())
    throw ModelError("modified_newton: x0 has " + std::to_string(x0.size()) +
                     " entries, operator expects " + std::to_string(frozen.cols()));
  CorrectionResult res;
  res.params = x0;
  Vec Fx = F(x0);
  if (Fx.size() != frozen.rows()) throw ModelError("modified_newton: residual size mismatch");
  double norm = Fx.norm();
  res.trace.push_back(norm);
  res.residual_norm = norm;
  if (norm <= tol) {
    res.converged = true;
    res.status = CorrectionStatus::Converged;
    return res;
  }
  int increases = 0;
  for (int it = 1; it <= max_iter; ++it) {
    const Vec next = res.params - frozen.solve(Fx);
    const Vec Fn = F(next);
    const double nn = Fn.norm();
    res.iterations = it;
    res.trace.push_back(nn);
    if (!std::isfinite(nn)) {
      res.status = CorrectionStatus::Diverged;
      return res;
    }
    res.max_contraction = std::max(res.max_contraction, nn / norm);
    increases = nn > norm ? increases + 1 : 0;
    res.params = next;
    res.residual_norm = nn;
    Fx = Fn;
    norm = nn;
    if (nn <= tol) {
      res.converged = true;
      res.status = CorrectionStatus::Converged;
      return res;
    }
    if (increases >= 2) {
      res.status = CorrectionStatus::Diverged;
      return res;
    }
  }
  res.status = CorrectionStatus::MaxIterations;
  return res;
}

// ------------------------------------------------------------- endpoints

RelaxedControl panel_aligned(const RelaxedControl& rc, int panels) {
  if (panels < 1) return rc;
  const TimeGrid& g = rc.grid();
  std::vector<double> cuts;
  for (int p = 1; p < panels; ++p) cuts.push_back(g.t0() + (g.t1() - g.t0()) * p / panels);
  TimeGrid wg = g.refined(cuts);
  if (wg == g) return rc;
  Mat W(static_cast<Eigen::Index>(wg.size()), rc.k());
  for (std::size_t q = 0; q + 1 < wg.size(); ++q)
    W.row(static_cast<Eigen::Index>(q)) = rc.weights_at(0.5 * (wg[q] + wg[q + 1]));
  W.row(W.rows() - 1) = rc.weights().row(rc.weights().rows() - 1);
  return RelaxedControl(rc.controls(), std::move(wg), std::move(W));
}

int panel_of(const RelaxedControl& rc, std::size_t row, int panels) {
  const TimeGrid& g = rc.grid();
  const std::size_t q = std::min(row, g.size() - 2);
  const double mid = 0.5 * (g[q] + g[q + 1]);
  const int p = static_cast<int>(std::floor((mid - g.t0()) / (g.t1() - g.t0()) * panels));
  return std::clamp(p, 0, panels - 1);
}

EndpointParametrization make_parametrization(const ControlProblem& prob, const RelaxedControl& rc,
                                             const Vec& xi, const CorrectionOptions& opts) {
  EndpointParametrization par;
  for (int c : opts.free_xi) {
    if (c < 0 || c >= prob.n()) throw ModelError("correct: free xi index out of range");
    if (std::find(par.free_xi.begin(), par.free_xi.end(), c) != par.free_xi.end())
      throw ModelError("correct: duplicate free xi index");
    par.free_xi.push_back(c);
  }
  par.k = rc.k();
  par.panels = rc.k() > 1 ? opts.weight_panels : 0;
  const TimeGrid grid = TimeGrid::uniform(prob.t0(), prob.t1(), opts.grid_nodes).refined(rc.grid().nodes());
  const Trajectory base = integrate_relaxed(prob, rc, xi, grid);
  const Vec fv = prob.endpoints().eval_f(base.initial(), base.terminal()).value;
  for (int i = 0; i < fv.size(); ++i)
    if (fv(i) >= -opts.active_tol) {
      par.rows.push_back(i);
      ++par.active_f;
    }
  for (int i = 0; i < prob.endpoints().m2(); ++i) par.rows.push_back(i);
  return par;
}

namespace {

void project_simplex(RowVec& w) {
  if ((w.array() >= 0.0).all() && std::fabs(w.sum() - 1.0) <= 1e-13) return;
  std::vector<double> v(w.data(), w.data() + w.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    cum += v[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (v[i] - t > 0.0) theta = t;
  }
  w = (w.array() - theta).max(0.0).matrix();
  w /= w.sum();
}

}  // namespace

RelaxedControl perturbed_control(const RelaxedControl& rc, const EndpointParametrization& par,
                                 const Vec& theta) {
  if (par.panels == 0 || par.k < 2) return rc;
  const int off = static_cast<int>(par.free_xi.size());
  Mat W = rc.weights();
  for (Eigen::Index q = 0; q < W.rows(); ++q) {
    const int p = panel_of(rc, static_cast<std::size_t>(q), par.panels);
    RowVec w = W.row(q);
    for (int i = 0; i + 1 < par.k; ++i) {
      const double d = theta(off + p * (par.k - 1) + i);
      w(i) += d;
      w(par.k - 1) -= d;
    }
    project_simplex(w);
    W.row(q) = w;
  }
  return RelaxedControl(rc.controls(), rc.grid(), std::move(W));
}

Vec perturbed_xi(const Vec& xi, const EndpointParametrization& par, const Vec& theta) {
  Vec out = xi;
  for (std::size_t c = 0; c < par.free_xi.size(); ++c)
    out(par.free_xi[c]) += theta(static_cast<Eigen::Index>(c));
  return out;
}

namespace {

struct RowJacobian {
  Vec value;
  Mat d_initial, d_terminal;
};

RowJacobian residual_rows(const ControlProblem& prob, const EndpointParametrization& par,
                          const Vec& y, const Vec& z) {
  const auto f = prob.endpoints().eval_f(y, z);
  const auto g = prob.endpoints().eval_g(y, z);
  const auto q = static_cast<Eigen::Index>(par.rows.size());
  RowJacobian out{Vec(q), Mat(q, prob.n()), Mat(q, prob.n())};
  for (Eigen::Index r = 0; r < q; ++r) {
    const bool is_f = r < par.active_f;
    const auto& src = is_f ? f : g;
    const Eigen::Index i = par.rows[static_cast<std::size_t>(r)];
    out.value(r) = src.value(i);
    out.d_initial.row(r) = src.d_initial.row(i);
    out.d_terminal.row(r) = src.d_terminal.row(i);
  }
  return out;
}

}  // namespace

Vec endpoint_residual(const ControlProblem& prob, const EndpointParametrization& par,
                      const Trajectory& x) {
  return residual_rows(prob, par, x.initial(), x.terminal()).value;
}

Mat relaxed_sensitivity(const ControlProblem& prob, const RelaxedControl& rc, const Vec& xi,
                        const EndpointParametrization& par, const TimeGrid& grid) {
  const Trajectory base = integrate_relaxed(prob, rc, xi, grid);
  const RowJacobian J = residual_rows(prob, par, base.initial(), base.terminal());
  const int n = prob.n();
  Mat S(static_cast<Eigen::Index>(par.rows.size()), par.dim());
  const auto m = static_cast<Eigen::Index>(rc.grid().size());
  int col = 0;
  for (int c : par.free_xi) {
    Vec dxi = Vec::Zero(n);
    dxi(c) = 1.0;
    const VariationalArc v = integrate_variational(prob, rc, base, dxi, Mat());
    S.col(col++) = J.d_initial * dxi + J.d_terminal * v.terminal();
  }
  for (int p = 0; p < par.panels; ++p)
    for (int i = 0; i + 1 < par.k; ++i) {
      Mat da = Mat::Zero(m, par.k);
      for (Eigen::Index q = 0; q < m; ++q)
        if (panel_of(rc, static_cast<std::size_t>(q), par.panels) == p) {
          da(q, i) = 1.0;
          da(q, par.k - 1) = -1.0;
        }
      const VariationalArc v = integrate_variational(prob, rc, base, Vec::Zero(n), da);
      S.col(col++) = J.d_terminal * v.terminal();
    }
  return S;
}

EndpointCorrection correct_endpoints(const ControlProblem& prob, const RelaxedControl& rc_in,
                                     const Vec& xi, int s, const CorrectionOptions& opts) {
  if (s < 1) throw ModelError("correct: s must be at least 1");
  if (xi.size() != prob.n()) throw ModelError("correct: xi has the wrong dimension");
  const RelaxedControl rc = panel_aligned(rc_in, rc_in.k() > 1 ? opts.weight_panels : 0);
  const TimeGrid grid =
      TimeGrid::uniform(prob.t0(), prob.t1(), opts.grid_nodes).refined(rc.grid().nodes());

  EndpointCorrection out;
  out.parametrization = make_parametrization(prob, rc, xi, opts);
  const auto& par = out.parametrization;
  const Trajectory base = integrate_relaxed(prob, rc, xi, grid);

  auto chattering_run = [&](const Vec& theta, Chattering* ch_out) {
    Chattering ch = build_chattering(perturbed_control(rc, par, theta), s);
    Trajectory x = integrate_state(prob, ch.u, perturbed_xi(xi, par, theta),
                                   grid.refined(ch.schedule.breakpoints));
    if (ch_out) *ch_out = std::move(ch);
    return x;
  };

  const Mat S = relaxed_sensitivity(prob, rc, xi, par, grid);
  const Vec theta0 = Vec::Zero(par.dim());
  const Vec F0 = endpoint_residual(prob, par, chattering_run(theta0, nullptr));

  // Rows the parameters cannot move are dropped if already satisfied.
  const double scale = S.size() ? std::max(1.0, S.cwiseAbs().maxCoeff()) : 1.0;
  bool stuck = false;
  for (Eigen::Index r = 0; r < S.rows(); ++r) {
    if (S.cols() > 0 && S.row(r).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      out.kept_rows.push_back(static_cast<int>(r));
    } else if (std::fabs(F0(r)) > opts.tol) {
      stuck = true;
      out.message += "row " + std::to_string(r) + " has zero sensitivity and residual " +
                     io::fmt17(F0(r)) + "; ";
    }
  }
  const auto q = static_cast<Eigen::Index>(out.kept_rows.size());
  out.sensitivity.resize(q, S.cols());
  for (Eigen::Index r = 0; r < q; ++r) out.sensitivity.row(r) = S.row(out.kept_rows[r]);
  auto kept = [&](const Vec& full) {
    Vec v(q);
    for (Eigen::Index r = 0; r < q; ++r) v(r) = full(out.kept_rows[r]);
    return v;
  };

  CorrectionResult& res = out.result;
  res.params = theta0;
  res.residual_norm = F0.norm();
  res.trace.push_back(res.residual_norm);
  if (stuck) {
    res.status = CorrectionStatus::RankDeficient;
  } else if (q == 0) {
    res.converged = true;
    res.status = CorrectionStatus::Converged;
  } else {
    try {
      const FrozenOperator frozen(out.sensitivity);
      auto F = [&](const Vec& theta) { return kept(endpoint_residual(prob, par, chattering_run(theta, nullptr))); };
      res = modified_newton(F, frozen, theta0, opts.tol, opts.max_iter);
    } catch (const ModelError& e) {
      res.status = CorrectionStatus::RankDeficient;
      out.message += e.what();
    }
  }

  Chattering ch;
  out.x = chattering_run(res.params, &ch);
  out.u = ch.u;
  out.rc = perturbed_control(rc, par, res.params);
  out.xi = perturbed_xi(xi, par, res.params);
  out.admissibility = admissibility(prob, out.x, out.u);
  for (std::size_t i = 0; i < grid.size(); ++i)
    out.sup_distance = std::max(
        out.sup_distance, (out.x.at(out.x.grid.nearest(grid[i])) - base.at(i)).lpNorm<Eigen::Infinity>());
  if (res.converged) {
    // Dropped rows and inactive inequalities must still hold.
    const Vec full = endpoint_residual(prob, par, out.x);
    res.residual_norm = full.norm();
    for (Eigen::Index r = 0; r < full.size(); ++r)
      if (std::fabs(full(r)) > opts.tol) {
        res.converged = false;
        res.status = CorrectionStatus::RankDeficient;
        out.message += "dropped row " + std::to_string(r) + " drifted; ";
      }
  }
  if (out.message.empty()) out.message = to_string(res.status);
  return out;
}

}  // namespace relaxoc
