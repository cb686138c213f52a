#include "relaxoc/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace relaxoc {

namespace {

double horner(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
  return v;
}

std::vector<double> parse_numbers(const std::string& text) {
  std::istringstream is(text);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ModelError("fspec: bad number '" + tok + "'");
    }
    if (used != tok.size()) throw ModelError("fspec: bad number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

Expr polynomial_expr(const std::vector<double>& c) {
  const Expr t = Expr::variable({VarKind::Time, 0});
  Expr sum = Expr::constant(0.0);
  for (std::size_t k = 0; k < c.size(); ++k)
    sum = sum + Expr::constant(c[k]) * Expr::power(t, static_cast<int>(k));
  return sum;
}

Expr var(VarKind kind, int i) { return Expr::variable({kind, i}); }

}  // namespace

PiecewisePolynomial::PiecewisePolynomial(std::vector<double> breaks,
                                         std::vector<std::vector<double>> coeffs,
                                         std::string name, bool require_continuity)
    : breaks_(std::move(breaks)), coeffs_(std::move(coeffs)), name_(std::move(name)) {
  if (breaks_.size() != coeffs_.size() + 1 || coeffs_.empty())
    throw ModelError("piecewise polynomial: need pieces+1 breaks");
  for (std::size_t i = 1; i < breaks_.size(); ++i)
    if (!(breaks_[i - 1] < breaks_[i])) throw ModelError("piecewise polynomial: breaks not increasing");
  for (auto& c : coeffs_)
    if (c.empty()) c.push_back(0.0);
  if (require_continuity) {
    for (std::size_t i = 1; i < coeffs_.size(); ++i) {
      const double b = breaks_[i];
      const double jump = horner(coeffs_[i - 1], b) - horner(coeffs_[i], b);
      if (std::fabs(jump) > 1e-12 * (1.0 + std::fabs(horner(coeffs_[i], b))))
        throw ModelError("piecewise polynomial: discontinuous at t=" + std::to_string(b));
    }
  }
}

std::shared_ptr<const PiecewisePolynomial> PiecewisePolynomial::polynomial(
    std::vector<double> coeffs) {
  return std::make_shared<PiecewisePolynomial>(std::vector<double>{0.0, 1.0},
                                               std::vector<std::vector<double>>{std::move(coeffs)});
}

std::shared_ptr<const PiecewisePolynomial> PiecewisePolynomial::parse(const std::string& text) {
  if (text.find(':') == std::string::npos) {
    auto c = parse_numbers(text);
    if (c.empty()) throw ModelError("fspec: no coefficients");
    return polynomial(std::move(c));
  }
  std::vector<double> breaks{0.0};
  std::vector<std::vector<double>> coeffs;
  std::istringstream is(text);
  std::string piece;
  while (std::getline(is, piece, ';')) {
    const auto colon = piece.find(':');
    if (colon == std::string::npos) throw ModelError("fspec: piece without ':' in '" + piece + "'");
    auto end = parse_numbers(piece.substr(0, colon));
    if (end.size() != 1) throw ModelError("fspec: piece end must be a single number");
    breaks.push_back(end[0]);
    coeffs.push_back(parse_numbers(piece.substr(colon + 1)));
  }
  return std::make_shared<PiecewisePolynomial>(std::move(breaks), std::move(coeffs));
}

std::size_t PiecewisePolynomial::piece_of(double t) const {
  auto it = std::upper_bound(breaks_.begin() + 1, breaks_.end() - 1, t);
  return static_cast<std::size_t>(it - (breaks_.begin() + 1));
}

double PiecewisePolynomial::value(double t) const { return horner(coeffs_[piece_of(t)], t); }

std::shared_ptr<const TimeFunction> PiecewisePolynomial::derivative() const {
  std::vector<std::vector<double>> d;
  for (const auto& c : coeffs_) {
    std::vector<double> dc;
    for (std::size_t k = 1; k < c.size(); ++k) dc.push_back(static_cast<double>(k) * c[k]);
    if (dc.empty()) dc.push_back(0.0);
    d.push_back(std::move(dc));
  }
  return std::make_shared<PiecewisePolynomial>(breaks_, std::move(d), name_ + "'", false);
}

int PiecewisePolynomial::degree() const {
  std::size_t deg = 0;
  for (const auto& c : coeffs_) deg = std::max(deg, c.size() - 1);
  return static_cast<int>(deg);
}

bool PiecewisePolynomial::unit_slope_piece(std::size_t i) const {
  const auto& c = coeffs_.at(i);
  if (c.size() < 2 || std::fabs(std::fabs(c[1]) - 1.0) > 1e-12) return false;
  for (std::size_t k = 2; k < c.size(); ++k)
    if (c[k] != 0.0) return false;
  return true;
}

void validate_fspec(const PiecewisePolynomial& f, int samples_per_piece) {
  if (std::fabs(f.value(f.breaks().front())) > 1e-12) throw ModelError("fspec: f(0) must be 0");
  const auto df = f.derivative();
  for (std::size_t p = 0; p < f.pieces(); ++p) {
    if (f.unit_slope_piece(p))
      throw ModelError("fspec: |f'| = 1 on a set of positive measure (piece " +
                       std::to_string(p) + ")");
    const double a = f.breaks()[p], b = f.breaks()[p + 1];
    for (int s = 0; s < samples_per_piece; ++s) {
      // Samples stay inside the piece so one-sided derivatives are used.
      const double t = a + (b - a) * (s + 0.5) / samples_per_piece;
      if (std::fabs(df->value(t)) > 1.0 + 1e-12)
        throw ModelError("fspec: |f'(t)| > 1 at t=" + std::to_string(t));
    }
  }
}

ControlProblem catalog_example1(const FSpec& f) {
  validate_fspec(*f);
  if (f->breaks().front() != 0.0 || f->breaks().back() != 1.0)
    throw ModelError("fspec must be defined on [0, 1]");
  const Expr x1 = var(VarKind::State, 0), u = var(VarKind::Control, 0);
  const Expr f_of_t = f->pieces() == 1 ? polynomial_expr(f->coeffs().front())
                                       : Expr::time_function(f);
  DynamicsModel dyn(2, 1, {u, Expr::power(x1 - f_of_t, 2) + Expr::power(u, 2)});
  const double inf = std::numeric_limits<double>::infinity();
  auto U = ControlSet::interval_union({{-inf, -1.0}, {1.0, inf}});
  const Expr f0 = var(VarKind::Terminal, 1);
  std::vector<Expr> g{var(VarKind::Terminal, 0) - Expr::constant(f->value(1.0))};
  return ControlProblem("example1", std::move(dyn), f0, {}, std::move(g), std::move(U), 0.0, 1.0,
                        Vec::Zero(2));
}

ControlProblem catalog_example2(const Expr& g, double eps) {
  if (!(eps > 0.0)) throw ModelError("example2: eps must be positive");
  if (g.references(VarKind::State) || g.references(VarKind::Time) ||
      g.max_index(VarKind::Control) > 1)
    throw ModelError("example2: g must be a function of u1 only");
  const double u0 = 0.0;
  if (std::fabs(g.eval(EvalPoint{0.0, {}, {&u0, 1}, {}, {}})) > 1e-12)
    throw ModelError("example2: g(0) must be 0");
  const Expr x1 = var(VarKind::State, 0), u = var(VarKind::Control, 0);
  DynamicsModel dyn(2, 1, {u, x1 * g});
  Vec lo(1), hi(1);
  lo << -eps;
  hi << eps;
  const Expr f0 = var(VarKind::Terminal, 1) - var(VarKind::Initial, 1);
  std::vector<Expr> rows{var(VarKind::Initial, 0), var(VarKind::Terminal, 0)};
  return ControlProblem("example2", std::move(dyn), f0, {}, std::move(rows),
                        ControlSet::box(lo, hi), 0.0, 1.0);
}

ControlProblem catalog_example3() {
  const double inf = std::numeric_limits<double>::infinity();
  DynamicsModel dyn(1, 1, {var(VarKind::Control, 0)});
  std::vector<Expr> g{var(VarKind::Terminal, 0) - Expr::constant(1.0)};
  return ControlProblem("example3", std::move(dyn), Expr::constant(0.0), {}, std::move(g),
                        ControlSet::interval_union({{-inf, inf}}), 0.0, 1.0, Vec::Zero(1));
}

ControlProblem catalog_example4() {
  const auto scope = ExprScope::dynamics(3, 1);
  DynamicsModel dyn(3, 1,
                    {parse_expr("u1", scope), parse_expr("4*u1^2 - 3*u1^3", scope),
                     parse_expr("(x1 - x2)^2", scope)});
  std::vector<Vec> pts;
  for (double v : {-1.0, 1.0 / 3.0, 1.0, 3.0}) pts.push_back(Vec::Constant(1, v));
  const auto escope = ExprScope::endpoints(3);
  return ControlProblem("example4", std::move(dyn), parse_expr("z1^2", escope), {},
                        {parse_expr("z3", escope)}, ControlSet::finite(std::move(pts)), 0.0, 1.0,
                        Vec::Zero(3));
}

ControlProblem catalog_problem(const std::string& name, const CatalogOptions& opts) {
  if (name == "example1") return catalog_example1(PiecewisePolynomial::parse(opts.fspec));
  if (name == "example2")
    return catalog_example2(parse_expr(opts.gspec, ExprScope::dynamics(2, 1)), opts.eps);
  if (name == "example3") return catalog_example3();
  if (name == "example4") return catalog_example4();
  throw ModelError("unknown catalog problem '" + name + "'");
}

}  // namespace relaxoc
