#include "relaxoc/problem_file.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "relaxoc/expr.hpp"

namespace relaxoc {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double number(const std::string& token, const std::string& where) {
  const std::string t = trim(token);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    const Expr e = parse_expr(t, ExprScope::dynamics(0, 0));
    if (e.references(VarKind::Time)) throw ConfigError(where + ": '" + t + "' is not a constant");
    const double v = e.eval(EvalPoint{});
    if (std::isnan(v)) throw ConfigError(where + ": '" + t + "' is not a number");
    return v;
  } catch (const ParseError& err) {
    throw ConfigError(where + ": " + err.what());
  } catch (const DomainError& err) {
    throw ConfigError(where + ": " + err.what());
  }
}

Vec vector_of(const std::string& text, const std::string& where) {
  const auto w = words(text);
  Vec v(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(w[i], where);
  return v;
}

Expr expression(const std::string& text, const ExprScope& scope, const std::string& where) {
  try {
    return parse_expr(text, scope);
  } catch (const ParseError& err) {
    throw ConfigError(where + ": " + err.what());
  }
}

int positive_int(const pt::ptree& sec, const std::string& key, const std::string& where) {
  const auto v = sec.get_optional<std::string>(key);
  if (!v) throw ConfigError(where + ": missing key '" + key + "'");
  const double d = number(*v, where + "." + key);
  if (d < 1 || d != std::floor(d) || d > 1e6)
    throw ConfigError(where + "." + key + " must be a positive integer");
  return static_cast<int>(d);
}

const pt::ptree& section(const pt::ptree& root, const std::string& name) {
  const auto s = root.get_child_optional(name);
  if (!s) throw ConfigError("missing section [" + name + "]");
  return *s;
}

std::vector<Expr> numbered(const pt::ptree& sec, const std::string& prefix, const ExprScope& scope,
                           const std::string& where) {
  std::vector<Expr> out;
  for (int i = 1;; ++i) {
    const auto v = sec.get_optional<std::string>(prefix + std::to_string(i));
    if (!v) break;
    out.push_back(expression(*v, scope, where + "." + prefix + std::to_string(i)));
  }
  return out;
}

void reject_unknown(const pt::ptree& sec, const std::string& where,
                    const std::function<bool(const std::string&)>& known) {
  for (const auto& [key, _] : sec)
    if (!known(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

bool numbered_key(const std::string& key, const std::string& prefix) {
  if (key.size() <= prefix.size() || key.compare(0, prefix.size(), prefix) != 0) return false;
  for (std::size_t i = prefix.size(); i < key.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(key[i]))) return false;
  return true;
}

ControlSet control_set(const pt::ptree& sec, int r) {
  const std::string type = trim(sec.get<std::string>("type", ""));
  if (type == "finite") {
    reject_unknown(sec, "[control_set]", [](const std::string& k) { return k == "type" || k == "points"; });
    std::vector<Vec> pts;
    for (const auto& p : split(sec.get<std::string>("points", ""), ';')) {
      if (p.empty()) continue;
      Vec v = vector_of(p, "[control_set].points");
      if (v.size() != r) throw ConfigError("[control_set].points: point of dimension " + std::to_string(v.size()) + ", expected " + std::to_string(r));
      pts.push_back(std::move(v));
    }
    if (pts.empty()) throw ConfigError("[control_set].points: no points");
    return ControlSet::finite(std::move(pts));
  }
  if (type == "intervals") {
    reject_unknown(sec, "[control_set]", [](const std::string& k) { return k == "type" || k == "intervals"; });
    if (r != 1) throw ConfigError("[control_set]: interval unions need r = 1");
    std::vector<Interval> iv;
    for (const auto& p : split(sec.get<std::string>("intervals", ""), ';')) {
      if (p.empty()) continue;
      const auto w = words(p);
      if (w.size() != 2) throw ConfigError("[control_set].intervals: expected 'lo hi' pairs");
      iv.push_back({number(w[0], "[control_set].intervals"), number(w[1], "[control_set].intervals")});
    }
    if (iv.empty()) throw ConfigError("[control_set].intervals: no intervals");
    return ControlSet::interval_union(std::move(iv));
  }
  if (type == "box") {
    reject_unknown(sec, "[control_set]", [](const std::string& k) { return k == "type" || k == "lower" || k == "upper"; });
    Vec lo = vector_of(sec.get<std::string>("lower", ""), "[control_set].lower");
    Vec hi = vector_of(sec.get<std::string>("upper", ""), "[control_set].upper");
    if (lo.size() != r || hi.size() != r) throw ConfigError("[control_set]: box bounds must have r entries");
    return ControlSet::box(std::move(lo), std::move(hi));
  }
  throw ConfigError("[control_set].type must be finite, intervals or box");
}

TripleSpec triple(const pt::ptree& sec, int n, int r, double t0, double t1) {
  TripleSpec spec;
  const ExprScope tscope = ExprScope::dynamics(0, 0);
  for (const auto& [key, _] : sec)
    if (key != "weights" && key != "xi" && !numbered_key(key, "control"))
      throw ConfigError("[triple]: unknown key '" + key + "'");
  for (int i = 1;; ++i) {
    const std::string key = "control" + std::to_string(i);
    const auto v = sec.get_optional<std::string>(key);
    if (!v) break;
    std::vector<Expr> comps;
    for (const auto& c : split(*v, ',')) comps.push_back(expression(c, tscope, "[triple]." + key));
    if (static_cast<int>(comps.size()) != r) throw ConfigError("[triple]." + key + ": expected " + std::to_string(r) + " components");
    bool constant = true;
    for (const auto& c : comps) constant = constant && !c.references(VarKind::Time);
    if (constant) {
      Vec u(r);
      for (int j = 0; j < r; ++j) u(j) = comps[static_cast<std::size_t>(j)].eval(EvalPoint{});
      spec.controls.push_back(PiecewiseControl::constant(t0, t1, u));
    } else {
      spec.controls.push_back(PiecewiseControl::function(t0, t1, r, [comps, r](double t) {
        Vec u(r);
        for (int j = 0; j < r; ++j) u(j) = eval_expr(comps[static_cast<std::size_t>(j)], t, {}, {});
        return u;
      }));
    }
  }
  if (spec.controls.empty()) throw ConfigError("[triple]: no control1");
  const auto k = static_cast<Eigen::Index>(spec.controls.size());
  if (const auto w = sec.get_optional<std::string>("weights")) {
    spec.weights = vector_of(*w, "[triple].weights").transpose();
  } else if (k == 1) {
    spec.weights = RowVec::Ones(1);
  } else {
    throw ConfigError("[triple]: weights required for more than one control");
  }
  if (spec.weights.size() != k) throw ConfigError("[triple].weights: expected one weight per control");
  if ((spec.weights.array() < 0.0).any() || std::fabs(spec.weights.sum() - 1.0) > 1e-12)
    throw ConfigError("[triple].weights must lie on the simplex");
  spec.xi = Vec::Zero(n);
  if (const auto x = sec.get_optional<std::string>("xi")) spec.xi = vector_of(*x, "[triple].xi");
  if (spec.xi.size() != n) throw ConfigError("[triple].xi: expected n entries");
  return spec;
}

}  // namespace

RelaxedControl TripleSpec::relaxed(const TimeGrid& grid) const {
  return RelaxedControl::constant_weights(controls, grid, weights);
}

namespace {

ProblemFile parse_unchecked(const std::string& text, const std::string& name) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("problem file: ") + e.what());
  }
  for (const auto& [key, _] : root)
    if (key != "dynamics" && key != "endpoints" && key != "control_set" && key != "time" &&
        key != "triple")
      throw ConfigError("unknown section [" + key + "]");

  const auto& dyn = section(root, "dynamics");
  const int n = positive_int(dyn, "n", "[dynamics]");
  const int r = positive_int(dyn, "r", "[dynamics]");
  reject_unknown(dyn, "[dynamics]", [](const std::string& k) { return k == "n" || k == "r" || numbered_key(k, "phi"); });
  const auto scope = ExprScope::dynamics(n, r);
  std::vector<Expr> phi = numbered(dyn, "phi", scope, "[dynamics]");
  if (static_cast<int>(phi.size()) != n)
    throw ConfigError("[dynamics]: expected phi1..phi" + std::to_string(n));

  const auto& ep = section(root, "endpoints");
  reject_unknown(ep, "[endpoints]", [](const std::string& k) {
    return k == "f0" || k == "x0" || numbered_key(k, "f") || numbered_key(k, "g");
  });
  const auto escope = ExprScope::endpoints(n);
  const auto f0s = ep.get_optional<std::string>("f0");
  if (!f0s) throw ConfigError("[endpoints]: missing key 'f0'");
  Expr f0 = expression(*f0s, escope, "[endpoints].f0");
  std::vector<Expr> f = numbered(ep, "f", escope, "[endpoints]");
  std::vector<Expr> g = numbered(ep, "g", escope, "[endpoints]");
  std::optional<Vec> x0;
  if (const auto x = ep.get_optional<std::string>("x0")) {
    x0 = vector_of(*x, "[endpoints].x0");
    if (x0->size() != n) throw ConfigError("[endpoints].x0: expected n entries");
  }

  ControlSet U = control_set(section(root, "control_set"), r);

  const pt::ptree tm = root.get_child("time", pt::ptree{});
  reject_unknown(tm, "[time]", [](const std::string& k) { return k == "t0" || k == "t1"; });
  const double t0 = number(tm.get<std::string>("t0", "0"), "[time].t0");
  const double t1 = number(tm.get<std::string>("t1", "1"), "[time].t1");
  if (!(std::isfinite(t0) && std::isfinite(t1) && t1 > t0)) throw ConfigError("[time]: need finite t0 < t1");

  std::optional<TripleSpec> tr;
  if (const auto s = root.get_child_optional("triple")) tr = triple(*s, n, r, t0, t1);

  return ProblemFile{ControlProblem(name, DynamicsModel(n, r, std::move(phi)), std::move(f0),
                                    std::move(f), std::move(g), std::move(U), t0, t1, x0),
                     std::move(tr)};
}

}  // namespace

ProblemFile parse_problem(const std::string& text, const std::string& name) {
  try {
    return parse_unchecked(text, name);
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string stem = path;
  if (const auto p = stem.find_last_of('/'); p != std::string::npos) stem = stem.substr(p + 1);
  if (const auto p = stem.find_last_of('.'); p != std::string::npos) stem = stem.substr(0, p);
  return parse_problem(ss.str(), stem.empty() ? "problem" : stem);
}

}  // namespace relaxoc
