#include "relaxoc/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>
#include <boost/rational.hpp>

#include "relaxoc/chatter.hpp"
#include "relaxoc/correct.hpp"
#include "relaxoc/io.hpp"
#include "relaxoc/relax.hpp"

namespace relaxoc {

using nlohmann::json;

// --------------------------------------------------------------- report

bool ScenarioReport::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

const Assertion& ScenarioReport::assertion(const std::string& name) const {
  for (const auto& a : assertions)
    if (a.name == name) return a;
  throw std::out_of_range("no assertion '" + name + "' in " + id);
}

void ScenarioReport::check(const std::string& name, bool ok, double value, double expected,
                           const std::string& tolerance, std::string detail) {
  if (!tolerances.count(tolerance))
    throw std::logic_error("assertion '" + name + "' uses unnamed tolerance '" + tolerance + "'");
  assertions.push_back({name, ok, value, expected, tolerance, std::move(detail)});
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v(i)));
  return a;
}

json row_json(const RowVec& v) { return vec_json(v.transpose()); }

}  // namespace

json ScenarioReport::to_json() const {
  json j;
  j["scenario"] = id;
  j["inputs"] = inputs;
  j["results"] = results;
  j["tolerances"] = tolerances;
  json a = json::array();
  for (const auto& x : assertions)
    a.push_back({{"name", x.name},
                 {"passed", x.passed},
                 {"value", finite_or_null(x.value)},
                 {"expected", finite_or_null(x.expected)},
                 {"tolerance", x.tolerance},
                 {"detail", x.detail}});
  j["assertions"] = a;
  json files_j = json::array();
  for (const auto& [name, _] : files) files_j.push_back(name);
  j["artifacts"] = files_j;
  j["passed"] = passed();
  return j;
}

std::vector<std::filesystem::path> ScenarioReport::write(const std::filesystem::path& out_dir) const {
  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : files) {
    io::write_atomic(out_dir / name, content);
    written.push_back(out_dir / name);
  }
  io::write_atomic(out_dir / "report.json", to_json().dump(2) + "\n");
  written.push_back(out_dir / "report.json");
  return written;
}

MpOptions ScenarioOptions::mp() const {
  MpOptions o;
  o.window = window;
  o.strict = strict;
  o.tol = tol;
  return o;
}

// -------------------------------------------------------------- triples

Triple example1_triple(const ControlProblem& prob, const FSpec& f, const TimeGrid& grid) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  Mat W(m, 2);
  for (Eigen::Index q = 0; q + 1 < m; ++q) {
    const std::size_t i = static_cast<std::size_t>(q);
    const double slope = (f->value(grid[i + 1]) - f->value(grid[i])) / (grid[i + 1] - grid[i]);
    W(q, 0) = 0.5 * (1.0 + slope);
    W(q, 1) = 0.5 * (1.0 - slope);
  }
  W.row(m - 1) = W.row(m - 2);
  const double t0 = prob.t0(), t1 = prob.t1();
  RelaxedControl rc({PiecewiseControl::constant(t0, t1, Vec::Constant(1, 1.0)),
                     PiecewiseControl::constant(t0, t1, Vec::Constant(1, -1.0))},
                    grid, std::move(W));
  Vec xi(2);
  xi << f->value(t0), 0.0;
  Trajectory x = integrate_relaxed(prob, rc, xi, grid);
  return {std::move(x), std::move(rc)};
}

Triple example4_triple(const ControlProblem& prob, const TimeGrid& grid) {
  std::vector<PiecewiseControl> u;
  for (double v : {-1.0, 3.0, 1.0 / 3.0})
    u.push_back(PiecewiseControl::constant(prob.t0(), prob.t1(), Vec::Constant(1, v)));
  RowVec w(3);
  w << 3.0 / 8.0, 1.0 / 16.0, 9.0 / 16.0;
  RelaxedControl rc = RelaxedControl::constant_weights(std::move(u), grid, w);
  Trajectory x = integrate_relaxed(prob, rc, Vec::Zero(3), grid);
  return {std::move(x), std::move(rc)};
}

Triple catalog_triple(const std::string& name, const CatalogOptions& opts, const TimeGrid& grid) {
  const ControlProblem prob = catalog_problem(name, opts);
  if (name == "example1") return example1_triple(prob, PiecewisePolynomial::parse(opts.fspec), grid);
  if (name == "example4") return example4_triple(prob, grid);
  const double u0 = name == "example3" ? 1.0 : 0.0;
  RelaxedControl rc = RelaxedControl::single(
      PiecewiseControl::constant(prob.t0(), prob.t1(), Vec::Constant(1, u0)), grid);
  Trajectory x = integrate_relaxed(prob, rc, Vec::Zero(prob.n()), grid);
  return {std::move(x), std::move(rc)};
}

// ------------------------------------------------------------ example 1

namespace {

bool linear_through_origin(const PiecewisePolynomial& f, double* slope) {
  if (f.pieces() != 1 || f.degree() > 1) return false;
  const auto& c = f.coeffs().front();
  if (!c.empty() && c[0] != 0.0) return false;
  *slope = c.size() > 1 ? c[1] : 0.0;
  return true;
}

}  // namespace

ScenarioReport run_example1(const std::string& fspec, const std::vector<int>& n_list,
                            const std::vector<int>& s_list, const ScenarioOptions& opts) {
  ScenarioReport rep;
  rep.id = "example1";
  rep.inputs = {{"fspec", fspec}, {"n_list", n_list}, {"s_list", s_list}, {"grid", opts.grid},
                {"window", opts.window}};
  rep.tolerances = {{"tol_mp", opts.tol},      {"tol_reg", 1e-7},     {"tol_closed_form", 1e-9},
                    {"tol_broken_line", 1e-3}, {"tol_chatter", 0.02}, {"tol_newton", 1e-8},
                    {"tol_round", 1e-12}};

  const FSpec f = PiecewisePolynomial::parse(fspec);
  validate_fspec(*f);
  const ControlProblem prob = catalog_example1(f);
  const TimeGrid grid = TimeGrid::uniform(prob.t0(), prob.t1(), opts.grid).refined(f->breaks());
  const Triple triple = example1_triple(prob, f, grid);
  const MpOptions mpo = opts.mp();

  // Normal multipliers.
  const MultiplierSearch free = find_multipliers(prob, triple, Lambda0Mode::Free, mpo);
  const FoundMultiplier* normal = nullptr;
  for (const auto& fm : free.found)
    if (fm.tuple.lambda0 > 0.0) {
      normal = &fm;
      break;
    }
  rep.results["multipliers_found"] = free.found.size();
  if (normal) {
    const MultiplierTuple tuple = normal->tuple.scaled(1.0 / normal->tuple.lambda0);
    const ConditionResiduals res = condition_residuals(prob, triple, tuple, mpo);
    const RowVec p0 = res.p.at(0);
    rep.results["lambda0"] = tuple.lambda0;
    rep.results["lambda_g"] = vec_json(tuple.lambda_g);
    rep.results["p_t0"] = row_json(p0);
    rep.results["residuals"] = {{"stationarity", res.stationarity},
                                {"transversality_t0", res.transversality_t0},
                                {"transversality_t1", res.transversality_t1},
                                {"slackness", res.slackness},
                                {"maximum_condition", res.maximum_condition}};
    rep.check("mp_residuals", res.worst() <= opts.tol, res.worst(), 0.0, "tol_mp");
    RowVec dir(2);
    dir << 0.0, -1.0;
    double pdev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      pdev = std::max(pdev, (res.p.at(i) - dir).lpNorm<Eigen::Infinity>());
    rep.check("p_direction", pdev <= opts.tol, pdev, 0.0, "tol_mp", "sup_t |p(t) - (0,-1)|");
  } else {
    rep.check("mp_residuals", false, free.best_margin, 0.0, "tol_mp", "no multiplier with lambda0 > 0");
  }

  // Regularity.
  const RegularityVerdict reg = regularity_check(prob, triple, 1e-7, mpo);
  rep.results["regular"] = reg.regular;
  rep.results["regularity_margin"] = finite_or_null(reg.margin);
  rep.results["regularity_certificate"] = reg.certificate;
  rep.check("regular", reg.regular, reg.margin, 0.0, "tol_reg", reg.annotation);

  // Broken-line approximations.
  double slope = 0.0;
  const bool linear = linear_through_origin(*f, &slope);
  std::vector<std::vector<double>> bl_rows;
  json bl = json::array();
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity(), max_cf = 0.0;
  for (int n : n_list) {
    const BrokenLine b = broken_line(f, n);
    bl.push_back({{"n", n}, {"x2_final", b.x2_final}});
    if (!(b.x2_final <= prev)) monotone = false;
    prev = b.x2_final;
    std::vector<double> row{static_cast<double>(n), b.x2_final};
    if (linear) {
      const double q = 1.0 - slope * slope;
      const double cf = 1.0 + q * q / (12.0 * n * static_cast<double>(n));
      max_cf = std::max(max_cf, std::fabs(b.x2_final - cf));
      row.push_back(cf);
    }
    bl_rows.push_back(row);
    if (n == 256)
      rep.check("broken_line_n256", b.x2_final <= 1.0 + 1e-3, b.x2_final, 1.0, "tol_broken_line");
    if (n == 1 && linear)
      rep.check("broken_line_n1", std::fabs(b.x2_final - bl_rows.back()[2]) <= 1e-9, b.x2_final,
                bl_rows.back()[2], "tol_closed_form");
  }
  rep.results["broken_line"] = bl;
  rep.check("broken_line_monotone", monotone, prev, 1.0, "tol_round", "x2n(1) nonincreasing in n");
  if (linear)
    rep.check("broken_line_closed_form", max_cf <= 1e-9, max_cf, 0.0, "tol_closed_form",
              "1 + (1 - c^2)^2 / (12 n^2)");
  rep.files["broken_line.csv"] =
      linear ? io::csv({"n", "x2_final", "closed_form"}, bl_rows) : io::csv({"n", "x2_final"}, bl_rows);

  // Chattering convergence.
  const ConvergenceTable table = convergence_study(prob, triple.rc, triple.x.initial(), s_list, grid);
  json ct = json::array();
  for (const auto& r : table.rows)
    ct.push_back({{"s", r.s}, {"sup_error", r.sup_error}, {"endpoint_error", r.endpoint_error}});
  rep.results["chattering"] = ct;
  rep.results["chattering_rate"] = table.sup_error_rate();
  rep.check("chattering_decreasing", table.sup_error_decreasing(),
            table.rows.empty() ? 0.0 : table.rows.front().sup_error, 0.0, "tol_chatter");
  if (!table.rows.empty())
    rep.check("chattering_final", table.rows.back().sup_error <= 0.02, table.rows.back().sup_error,
              0.0, "tol_chatter");
  rep.files["chattering.csv"] = table.csv();
  rep.files["chattering.svg"] = table.svg();

  // corrector from the finest chattering control
  if (!s_list.empty()) {
    CorrectionOptions co;
    co.grid_nodes = opts.grid;
    const EndpointCorrection ec = correct_endpoints(prob, triple.rc, triple.x.initial(), s_list.back(), co);
    const double defect = std::fabs(ec.x.terminal()(0) - f->value(prob.t1()));
    rep.results["corrector"] = ec.result.to_json();
    rep.results["corrector"]["sup_distance"] = ec.sup_distance;
    rep.results["corrector"]["x2_final"] = ec.x.terminal()(1);
    rep.check("corrector_defect", ec.result.converged && defect <= 1e-8, defect, 0.0, "tol_newton",
              ec.message);
    rep.check("corrector_cost", ec.x.terminal()(1) >= 1.0 - 1e-12, ec.x.terminal()(1), 1.0,
              "tol_round", "x2(1) >= 1");
    rep.files["corrector_trace.csv"] = ec.result.trace_csv();
  }
  rep.files["trajectory.csv"] = trajectory_csv(triple.x);
  return rep;
}

// ------------------------------------------------------------ example 2

ScenarioReport run_example2(const std::string& gspec, double eps, int grid_n,
                            const ScenarioOptions& opts) {
  (void)opts;
  ScenarioReport rep;
  rep.id = "example2";
  rep.inputs = {{"g", gspec}, {"eps", eps}, {"grid_n", grid_n}};
  rep.tolerances = {{"tol_pair", 1e-9}, {"tol_zero", 1e-12}};
  if (!(eps > 0.0)) throw ModelError("example2: eps must be positive");
  if (grid_n < 1) throw ModelError("example2: grid_n must be positive");

  const Expr g = parse_expr(gspec, ExprScope::dynamics(2, 1));
  const ControlProblem prob = catalog_example2(g, eps);  // validates g
  auto G = [&](double u) {
    const double x[2] = {0.0, 0.0};
    return eval_expr(g, 0.0, x, std::span<const double>(&u, 1));
  };

  std::vector<double> neg, pos;
  for (int i = 0; i < grid_n; ++i) {
    neg.push_back(-eps + eps * i / grid_n);
    pos.push_back(eps * (i + 1) / grid_n);
  }
  pos.back() = eps;
  double gmax = 0.0;
  for (double u : neg) gmax = std::max(gmax, std::fabs(G(u)));
  for (double u : pos) gmax = std::max(gmax, std::fabs(G(u)));
  const double scale = std::max(1.0, eps * gmax);

  double worst = -1.0, w1 = 0.0, w2 = 0.0;
  for (double u1 : neg)
    for (double u2 : pos) {
      const double d = std::fabs(u2 * G(u1) - u1 * G(u2));
      if (d > worst) {
        worst = d;
        w1 = u1;
        w2 = u2;
      }
    }
  const bool consistent = worst <= 1e-9 * scale;
  const double anti = std::fabs(G(-eps) + G(eps));
  rep.results["max_pair_defect"] = worst;
  rep.results["witness_pair"] = {w1, w2};
  rep.results["scale"] = scale;
  rep.results["antisymmetry_defect"] = anti;
  rep.results["consistent"] = consistent;
  rep.results["verdict"] = consistent ? "consistent with the necessary conditions"
                                      : "inconsistent with the necessary conditions";
  rep.results["dynamics"] = prob.dynamics().phi()[1].str();

  rep.check("g_zero_at_origin", std::fabs(G(0.0)) <= 1e-12, G(0.0), 0.0, "tol_zero");
  rep.check("antisymmetry_if_consistent", !consistent || anti <= 1e-9 * scale, anti, 0.0, "tol_pair",
            "consistent implies g(-eps) = -g(eps)");
  const double recomputed = std::fabs(w2 * G(w1) - w1 * G(w2));
  rep.check("witness_recomputes", recomputed == worst, recomputed, worst, "tol_zero");
  return rep;
}

// ------------------------------------------------------------ example 3

ScenarioReport run_example3(const std::vector<int>& n_list, const ScenarioOptions& opts) {
  ScenarioReport rep;
  rep.id = "example3";
  rep.inputs = {{"n_list", n_list}, {"grid", opts.grid}};
  rep.tolerances = {{"tol_sup", 1e-6}, {"tol_exact", 0.0}, {"tol_endpoint", 1e-6}};
  if (n_list.empty()) throw ModelError("example3: n_list is empty");
  const ControlProblem prob = catalog_example3();

  json rows = json::array();
  std::vector<std::vector<double>> table;
  for (int n : n_list) {
    if (n < 1) throw ModelError("example3: n must be positive");
    const double rn = std::sqrt(static_cast<double>(n));
    const double tn = 1.0 / n;
    // sup |x_n - sqrt t| lies on [0, 1/n]; beyond it the two coincide.
    auto neg_gap = [rn](double t) { return -(std::sqrt(t) - rn * t); };
    const auto [targ, fmin] = boost::math::tools::brent_find_minima(neg_gap, 0.0, tn, 52);
    const double sup = -fmin;

    const std::vector<double> breaks = n == 1 ? std::vector<double>{0.0, 1.0}
                                              : std::vector<double>{0.0, tn, 1.0};
    std::vector<PiecewiseControl::Value> vals{Vec(Vec::Constant(1, rn))};
    if (n > 1) vals.emplace_back([](double t) { return Vec(Vec::Constant(1, 0.5 / std::sqrt(t))); });
    const PiecewiseControl u(breaks, std::move(vals), 1);
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, opts.grid).refined({tn});
    double umax = 0.0;
    for (double t : grid.nodes()) umax = std::max(umax, u(t)(0));
    const Trajectory x = integrate_state(prob, u, Vec::Zero(1), grid);
    const double defect = std::fabs(x.terminal()(0) - 1.0);

    const double expected = 1.0 / (4.0 * rn);
    rep.check("sup_error_n" + std::to_string(n), std::fabs(sup - expected) <= 1e-6, sup, expected,
              "tol_sup", "argmax t = " + io::fmt17(targ));
    rep.check("u_sup_n" + std::to_string(n), umax == rn, umax, rn, "tol_exact");
    rep.check("endpoint_n" + std::to_string(n), defect <= 1e-6, defect, 0.0, "tol_endpoint",
              "x_n(1) = 1");
    rows.push_back({{"n", n}, {"sup_error", sup}, {"u_sup", umax}, {"argmax_t", targ}});
    table.push_back({static_cast<double>(n), sup, expected, umax});
  }
  rep.results["rows"] = rows;
  rep.results["conclusion"] =
      "x_n -> sqrt(t) uniformly while sup|u_n| = sqrt(n) is unbounded; the limit has no "
      "representation with essentially bounded component controls (observed, not proved)";
  rep.files["example3.csv"] = io::csv({"n", "sup_error", "expected", "u_sup"}, table);
  return rep;
}

// ------------------------------------------------------------ example 4

Example4BruteForce example4_brute_force(int panels, double x3_tol) {
  if (panels < 1 || panels > 16) throw ModelError("example4_brute_force: 1 <= panels <= 16");
  const double values[4] = {-1.0, 1.0 / 3.0, 1.0, 3.0};
  const double h = 1.0 / panels;
  Example4BruteForce out;
  out.min_x1 = std::numeric_limits<double>::infinity();
  std::vector<double> path(static_cast<std::size_t>(panels));
  // Exact panel update for constant u: x1, x2 move linearly and
  // x3 gains int_0^h (d + delta tau)^2 dtau with d = x1 - x2.
  std::function<void(int, double, double, double)> dfs = [&](int depth, double x1, double x2, double x3) {
    if (x3 > x3_tol) return;
    if (depth == panels) {
      ++out.admissible;
      if (x1 < out.min_x1) {
        out.min_x1 = x1;
        out.argmin = path;
      }
      return;
    }
    for (double u : values) {
      const double v2 = 4.0 * u * u - 3.0 * u * u * u;
      const double d = x1 - x2, delta = u - v2;
      const double inc = h * d * d + d * delta * h * h + delta * delta * h * h * h / 3.0;
      path[static_cast<std::size_t>(depth)] = u;
      dfs(depth + 1, x1 + u * h, x2 + v2 * h, x3 + inc);
    }
  };
  dfs(0, 0.0, 0.0, 0.0);
  return out;
}

ScenarioReport run_example4(const ScenarioOptions& opts) {
  ScenarioReport rep;
  rep.id = "example4";
  rep.inputs = {{"grid", opts.grid}, {"window", opts.window}};
  rep.tolerances = {{"tol_identity", 1e-12}, {"tol_exact", 0.0},     {"tol_zero_traj", 1e-9},
                    {"tol_reg", 1e-7},       {"tol_optimum", 1e-9}, {"tol_negative", 0.33},
                    {"tol_adm", 1e-6}};
  const ControlProblem prob = catalog_example4();

  // Convex-combination identities.
  const double u[3] = {-1.0, 3.0, 1.0 / 3.0};
  const double a[3] = {3.0 / 8.0, 1.0 / 16.0, 9.0 / 16.0};
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    m1 += a[i] * u[i];
    m2 += a[i] * (4.0 * u[i] * u[i] - 3.0 * u[i] * u[i] * u[i]);
  }
  using Q = boost::rational<long long>;
  const Q uq[3] = {Q(-1), Q(3), Q(1, 3)};
  const Q aq[3] = {Q(3, 8), Q(1, 16), Q(9, 16)};
  Q r1(0), r2(0);
  for (int i = 0; i < 3; ++i) {
    r1 += aq[i] * uq[i];
    r2 += aq[i] * (Q(4) * uq[i] * uq[i] - Q(3) * uq[i] * uq[i] * uq[i]);
  }
  rep.results["identity_first"] = m1;
  rep.results["identity_second"] = m2;
  rep.check("identity_first", std::fabs(m1) <= 1e-12, m1, 0.0, "tol_identity", "sum alpha_i u_i");
  rep.check("identity_second", std::fabs(m2) <= 1e-12, m2, 0.0, "tol_identity",
            "sum alpha_i (4 u_i^2 - 3 u_i^3)");
  rep.check("identity_rational", r1 == Q(0) && r2 == Q(0), boost::rational_cast<double>(r1 + r2), 0.0,
            "tol_exact");

  // Zero relaxed triple.
  const TimeGrid grid = TimeGrid::uniform(prob.t0(), prob.t1(), opts.grid);
  const Triple triple = example4_triple(prob, grid);
  const double zsup = triple.x.values.cwiseAbs().maxCoeff();
  rep.results["zero_triple_sup"] = zsup;
  rep.check("zero_triple", zsup <= 1e-9, zsup, 0.0, "tol_zero_traj");
  const AdmissibilityReport adm = admissibility(prob, triple.x, triple.rc);
  rep.check("zero_triple_admissible", adm.worst() <= 1e-9, adm.worst(), 0.0, "tol_zero_traj");

  // Regularity.
  const RegularityVerdict reg = regularity_check(prob, triple, 1e-7, opts.mp());
  rep.results["regular"] = reg.regular;
  rep.results["regularity_certificate"] = reg.certificate;
  rep.check("not_regular", !reg.regular, reg.margin, 0.0, "tol_reg", reg.annotation);
  if (reg.witness) {
    const auto& w = *reg.witness;
    const RowVec p0 = w.residuals.p.at(0);
    rep.results["witness"] = {{"lambda0", w.tuple.lambda0},
                              {"lambda_g", vec_json(w.tuple.lambda_g)},
                              {"p_t0", row_json(p0)},
                              {"margin", w.margin},
                              {"residual_worst", w.residuals.worst()}};
    rep.check("witness_residuals", w.tuple.lambda0 == 0.0 && w.residuals.worst() <= 1e-7,
              w.residuals.worst(), 0.0, "tol_reg");
    const double off = std::max(std::fabs(p0(0)), std::fabs(p0(1)));
    rep.check("witness_p3", std::fabs(p0(2)) > 1e-7 && off <= 1e-7, p0(2), 0.0, "tol_reg",
              "p = (0, 0, c) with c != 0");
  }

  // The constant control 1/3.
  const Trajectory xo = integrate_state(
      prob, PiecewiseControl::constant(prob.t0(), prob.t1(), Vec::Constant(1, 1.0 / 3.0)),
      Vec::Zero(3), grid);
  const double x1o = xo.terminal()(0);
  const double f0o = prob.endpoints().eval_f0(xo.initial(), xo.terminal()).value(0);
  rep.results["optimal_x1"] = x1o;
  rep.results["optimal_f0"] = f0o;
  rep.check("optimal_x1", std::fabs(x1o - 1.0 / 3.0) <= 1e-9, x1o, 1.0 / 3.0, "tol_optimum");
  rep.check("optimal_f0", std::fabs(f0o - 1.0 / 9.0) <= 1e-9, f0o, 1.0 / 9.0, "tol_optimum");
  rep.check("optimal_x3", std::fabs(xo.terminal()(2)) <= 1e-9, xo.terminal()(2), 0.0, "tol_optimum");

  // Exhaustive search over panel controls.
  const Example4BruteForce bf = example4_brute_force(12);
  rep.results["brute_force"] = {{"panels", 12},
                                {"min_x1", bf.min_x1},
                                {"admissible", bf.admissible}};
  rep.check("brute_force_min", std::fabs(bf.min_x1 - 1.0 / 3.0) <= 1e-9, bf.min_x1, 1.0 / 3.0,
            "tol_optimum");

  // Negative control: correcting chattering controls never closes the gap.
  json corr = json::array();
  bool gap_holds = true;
  double best_x1 = std::numeric_limits<double>::infinity();
  for (int s : {8, 32, 128, 512}) {
    CorrectionOptions co;
    co.grid_nodes = opts.grid;
    const EndpointCorrection ec = correct_endpoints(prob, triple.rc, Vec::Zero(3), s, co);
    const double x1 = ec.x.terminal()(0);
    const bool admissible = ec.result.converged && ec.admissibility.admissible(1e-6);
    if (admissible) best_x1 = std::min(best_x1, std::fabs(x1));
    if (admissible && std::fabs(x1) < 0.33) gap_holds = false;
    json c = ec.result.to_json();
    c["s"] = s;
    c["x1_final"] = x1;
    c["x3_final"] = ec.x.terminal()(2);
    c["admissible"] = admissible;
    c["message"] = ec.message;
    corr.push_back(c);
  }
  rep.results["corrector"] = corr;
  rep.check("closure_gap", gap_holds, best_x1, 1.0 / 3.0, "tol_negative",
            "no corrected plain trajectory with |x1(1)| < 0.33");
  rep.files["trajectory.csv"] = trajectory_csv(triple.x);
  return rep;
}

}  // namespace relaxoc
