#include "relaxoc_cli/cli.hpp"

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include <relaxoc/chatter.hpp>
#include <relaxoc/correct.hpp>
#include <relaxoc/io.hpp>
#include <relaxoc/problem_file.hpp>
#include <relaxoc/relax.hpp>

namespace relaxoc::cli {

namespace {

bool is_catalog(const std::string& name) {
  return name == "example1" || name == "example2" || name == "example3" || name == "example4";
}

CatalogOptions catalog_options(const RunConfig& cfg) {
  CatalogOptions o;
  o.fspec = cfg.fspec;
  o.gspec = cfg.g;
  o.eps = cfg.eps;
  return o;
}

struct Loaded {
  ControlProblem problem;
  std::optional<Triple> triple;
};

Loaded load(const RunConfig& cfg, bool need_triple) {
  try {
    if (is_catalog(cfg.problem)) {
      const CatalogOptions o = catalog_options(cfg);
      ControlProblem prob = catalog_problem(cfg.problem, o);
      std::optional<Triple> tr;
      if (need_triple) {
        const TimeGrid g = TimeGrid::uniform(prob.t0(), prob.t1(), cfg.grid);
        tr = catalog_triple(cfg.problem, o, cfg.problem == "example1"
                                                ? g.refined(PiecewisePolynomial::parse(o.fspec)->breaks())
                                                : g);
      }
      return {std::move(prob), std::move(tr)};
    }
    ProblemFile pf = load_problem(cfg.problem);
    std::optional<Triple> tr;
    if (need_triple) {
      if (!pf.triple) throw ConfigError("problem file has no [triple] section");
      const TimeGrid g = TimeGrid::uniform(pf.problem.t0(), pf.problem.t1(), cfg.grid);
      RelaxedControl rc = pf.triple->relaxed(g);
      Trajectory x = integrate_relaxed(pf.problem, rc, pf.triple->xi, g);
      tr = Triple{std::move(x), std::move(rc)};
    }
    return {std::move(pf.problem), std::move(tr)};
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::vector<int> or_default(const std::vector<int>& v, std::vector<int> d) { return v.empty() ? d : v; }

ScenarioReport check_mp(const RunConfig& cfg) {
  const Loaded L = load(cfg, true);
  ScenarioOptions so{cfg.grid, cfg.window, cfg.tol, cfg.strict};
  const MpOptions mpo = so.mp();
  ScenarioReport rep;
  rep.id = "check-mp";
  rep.inputs = {{"problem", cfg.problem}, {"grid", cfg.grid}, {"window", cfg.window}, {"tol", cfg.tol}};
  rep.tolerances = {{"tol", cfg.tol}, {"tol_reg", 1e-7}};
  const MultiplierSearch s = find_multipliers(L.problem, *L.triple, Lambda0Mode::Free, mpo);
  rep.results["multipliers_found"] = s.found.size();
  rep.results["best_margin"] = std::isfinite(s.best_margin) ? nlohmann::json(s.best_margin) : nlohmann::json(nullptr);
  rep.results["lp_solves"] = s.lp_solves;
  double worst = std::numeric_limits<double>::infinity();
  if (!s.found.empty()) {
    const auto& fm = s.found.front();
    const auto& t = fm.tuple;
    worst = fm.residuals.worst();
    rep.results["tuple"] = {{"lambda0", t.lambda0},
                            {"lambda_f", std::vector<double>(t.lambda_f.data(), t.lambda_f.data() + t.lambda_f.size())},
                            {"lambda_g", std::vector<double>(t.lambda_g.data(), t.lambda_g.data() + t.lambda_g.size())}};
    rep.results["residual_worst"] = worst;
    rep.results["boundary_flag"] = fm.residuals.boundary_flag;
    rep.files["costate.csv"] = trajectory_csv(Trajectory{fm.residuals.p.grid, fm.residuals.p.values}, "p");
  }
  const RegularityVerdict reg = regularity_check(L.problem, *L.triple, 1e-7, mpo);
  rep.results["regular"] = reg.regular;
  rep.results["regularity_certificate"] = reg.certificate;
  rep.results["regularity_annotation"] = reg.annotation;
  rep.check("maximum_principle", worst <= cfg.tol, worst, 0.0, "tol",
            s.found.empty() ? "no multiplier tuple found" : "");
  return rep;
}

ScenarioReport chatter_study(const RunConfig& cfg) {
  const Loaded L = load(cfg, true);
  const std::vector<int> s_list = or_default(cfg.s_list, {4, 8, 16, 32, 64});
  ScenarioReport rep;
  rep.id = "chatter-study";
  rep.inputs = {{"problem", cfg.problem}, {"grid", cfg.grid}, {"s_list", s_list}};
  rep.tolerances = {{"monotone", 0.0}};
  const ConvergenceTable t =
      convergence_study(L.problem, L.triple->rc, L.triple->x.initial(), s_list, L.triple->x.grid);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) rows.push_back({{"s", r.s}, {"sup_error", r.sup_error}, {"endpoint_error", r.endpoint_error}});
  rep.results["rows"] = rows;
  rep.results["rate"] = t.sup_error_rate();
  rep.check("sup_error_decreasing", t.sup_error_decreasing(), t.rows.back().sup_error, 0.0, "monotone");
  rep.files["chattering.csv"] = t.csv();
  rep.files["chattering.svg"] = t.svg();
  return rep;
}

ScenarioReport correct(const RunConfig& cfg) {
  const Loaded L = load(cfg, true);
  const int s = cfg.s_list.empty() ? 64 : cfg.s_list.back();
  CorrectionOptions co;
  co.grid_nodes = cfg.grid;
  co.weight_panels = cfg.panels;
  for (int c : cfg.free_xi) {
    require(c >= 1 && c <= L.problem.n(), "--free-xi index out of range");
    co.free_xi.push_back(c - 1);
  }
  ScenarioReport rep;
  rep.id = "correct";
  rep.inputs = {{"problem", cfg.problem}, {"grid", cfg.grid}, {"s", s}, {"panels", cfg.panels}, {"free_xi", cfg.free_xi}};
  rep.tolerances = {{"tol_newton", co.tol}, {"tol_adm", cfg.tol}};
  const EndpointCorrection ec = correct_endpoints(L.problem, L.triple->rc, L.triple->x.initial(), s, co);
  rep.results["correction"] = ec.result.to_json();
  rep.results["sup_distance"] = ec.sup_distance;
  rep.results["message"] = ec.message;
  rep.results["admissibility"] = {{"ode", ec.admissibility.ode_residual},
                                  {"ineq", ec.admissibility.ineq_violation},
                                  {"eq", ec.admissibility.eq_violation},
                                  {"set", ec.admissibility.set_violation}};
  rep.check("converged", ec.result.converged, ec.result.residual_norm, 0.0, "tol_newton", ec.message);
  rep.check("admissible", ec.admissibility.admissible(cfg.tol), ec.admissibility.worst(), 0.0, "tol_adm");
  rep.files["trace.csv"] = ec.result.trace_csv();
  rep.files["trajectory.csv"] = trajectory_csv(ec.x);
  return rep;
}

ScenarioReport growth_check(const RunConfig& cfg) {
  const Loaded L = load(cfg, false);
  GrowthSampleSpec spec;
  spec.radius = cfg.radius;
  spec.x_samples = cfg.samples;
  spec.window = cfg.window;
  ScenarioReport rep;
  rep.id = "growth-check";
  rep.inputs = {{"problem", cfg.problem}, {"K", cfg.K}, {"radius", cfg.radius}, {"samples", cfg.samples}, {"window", cfg.window}};
  rep.tolerances = {{"K", cfg.K}};
  const GrowthCheckReport g = check_growth(L.problem, cfg.K, spec);
  rep.results["max_ratio"] = g.max_ratio;
  rep.results["samples"] = g.samples;
  rep.results["verdict"] = g.verdict;
  rep.results["witness"] = {{"t", g.witness_t},
                            {"x", std::vector<double>(g.witness_x.data(), g.witness_x.data() + g.witness_x.size())},
                            {"u", std::vector<double>(g.witness_u.data(), g.witness_u.data() + g.witness_u.size())}};
  rep.check("growth_bound", g.passed, g.max_ratio, cfg.K, "K", g.verdict);
  return rep;
}

}  // namespace

void validate(const RunConfig& cfg) {
  const std::vector<std::string> modes{"example", "check-mp", "chatter-study", "correct", "growth-check"};
  require(std::find(modes.begin(), modes.end(), cfg.mode) != modes.end(), "unknown mode '" + cfg.mode + "'");
  require(cfg.grid >= 3, "--grid must be at least 3");
  require(cfg.window > 0.0 && std::isfinite(cfg.window), "--window must be positive");
  require(cfg.tol > 0.0, "--tol must be positive");
  for (int s : cfg.s_list) require(s >= 1, "--s values must be positive");
  for (std::size_t i = 1; i < cfg.s_list.size(); ++i)
    require(cfg.s_list[i] > cfg.s_list[i - 1], "--s values must be increasing");
  for (int n : cfg.n_list) require(n >= 1, "--n values must be positive");
  require(cfg.eps > 0.0, "--eps must be positive");
  require(cfg.pairs >= 1, "--pairs must be positive");
  require(cfg.K >= 0.0, "--K must be nonnegative");
  require(cfg.radius > 0.0, "--radius must be positive");
  require(cfg.samples >= 1, "--samples must be positive");
  require(cfg.panels >= 1, "--panels must be positive");
  require(!cfg.out_dir.empty(), "--out-dir must not be empty");
  try {
    validate_fspec(*PiecewisePolynomial::parse(cfg.fspec));
    parse_expr(cfg.g, ExprScope::dynamics(2, 1));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (cfg.mode == "example") {
    require(cfg.example >= 1 && cfg.example <= 4, "example number must be 1..4");
    if (cfg.example == 2) {
      try {
        catalog_example2(parse_expr(cfg.g, ExprScope::dynamics(2, 1)), cfg.eps);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    }
  } else {
    require(!cfg.problem.empty(), "--problem is required for " + cfg.mode);
    require(is_catalog(cfg.problem) || std::filesystem::is_regular_file(cfg.problem),
            "problem '" + cfg.problem + "' is neither a catalog name nor a file");
  }
}

ScenarioReport execute(const RunConfig& cfg) {
  validate(cfg);
  const ScenarioOptions so{cfg.grid, cfg.window, cfg.tol, cfg.strict};
  if (cfg.mode == "example") {
    switch (cfg.example) {
      case 1:
        return run_example1(cfg.fspec, or_default(cfg.n_list, {1, 2, 4, 8, 16, 32, 64, 128, 256}),
                            or_default(cfg.s_list, {4, 8, 16, 32, 64}), so);
      case 2: return run_example2(cfg.g, cfg.eps, cfg.pairs, so);
      case 3: return run_example3(or_default(cfg.n_list, {1, 4, 16, 100}), so);
      default: return run_example4(so);
    }
  }
  if (cfg.mode == "check-mp") return check_mp(cfg);
  if (cfg.mode == "chatter-study") return chatter_study(cfg);
  if (cfg.mode == "correct") return correct(cfg);
  return growth_check(cfg);
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relaxed optimal control toolkit"};
  app.require_subcommand(1);
  RunConfig cfg;
  auto* run = app.add_subcommand("run", "Run a scenario or a study");
  run->add_option("mode", cfg.mode, "example | check-mp | chatter-study | correct | growth-check")->required();
  run->add_option("number", cfg.example, "Example number 1..4 (mode example)");
  run->add_option("--problem", cfg.problem, "Catalog name (example1..4) or problem file");
  run->add_option("--grid", cfg.grid, "Grid nodes")->capture_default_str();
  run->add_option("--window", cfg.window, "Window for unbounded control sets")->capture_default_str();
  run->add_option("--tol", cfg.tol, "Tolerance for conditions and admissibility")->capture_default_str();
  run->add_option("--out-dir", cfg.out_dir, "Output directory")->capture_default_str();
  run->add_flag("--strict", cfg.strict, "Fail when a Hamiltonian argmax sits on the window edge");
  run->add_option("--s", cfg.s_list, "Chattering rates, comma separated")->delimiter(',');
  run->add_option("--n", cfg.n_list, "Broken-line or sequence indices, comma separated")->delimiter(',');
  run->add_option("--fspec", cfg.fspec, "Piecewise polynomial f for example1")->capture_default_str();
  run->add_option("--g", cfg.g, "g(u1) for example2")->capture_default_str();
  run->add_option("--eps", cfg.eps, "Control bound for example2")->capture_default_str();
  run->add_option("--pairs", cfg.pairs, "Grid size per side for the example2 pair test")->capture_default_str();
  run->add_option("--K", cfg.K, "Growth constant to test")->capture_default_str();
  run->add_option("--radius", cfg.radius, "Sampling radius for growth-check")->capture_default_str();
  run->add_option("--samples", cfg.samples, "State samples for growth-check")->capture_default_str();
  run->add_option("--free-xi", cfg.free_xi, "1-based initial-state components the corrector may move")->delimiter(',');
  run->add_option("--panels", cfg.panels, "Weight perturbation panels for the corrector")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    app.exit(e, out, err);
    return kConfigError;
  }

  ScenarioReport rep;
  try {
    rep = execute(cfg);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kAssertionFailed;
  }

  const std::filesystem::path dir = std::filesystem::path(cfg.out_dir) / rep.id;
  try {
    for (const auto& p : rep.write(dir)) out << "wrote " << p.string() << "\n";
  } catch (const std::exception& e) {
    err << "error writing artifacts: " << e.what() << "\n";
    return kAssertionFailed;
  }
  for (const auto& a : rep.assertions)
    out << (a.passed ? "PASS " : "FAIL ") << a.name << " value=" << io::fmt17(a.value) << " ("
        << a.tolerance << ")" << (a.detail.empty() ? "" : " " + a.detail) << "\n";
  return rep.passed() ? kOk : kAssertionFailed;
}

}  // namespace relaxoc::cli
