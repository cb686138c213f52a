#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <relaxoc/catalog.hpp>
#include <relaxoc/expr.hpp>

#include "oracles.hpp"

using namespace relaxoc;

namespace {

double at(const Expr& e, double t, std::vector<double> x = {}, std::vector<double> u = {}) {
  return e.eval(EvalPoint{t, x, u, {}, {}});
}

}  // namespace

TEST(Expr, PrecedenceAndAssociativity) {
  const auto s = ExprScope::dynamics(1, 1);
  EXPECT_DOUBLE_EQ(at(parse_expr("2 + 3 * 4^2", s), 0), 50.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("-2^2", s), 0), -4.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("8 / 4 / 2", s), 0), 1.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("8 - 4 - 2", s), 0), 2.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("2^-1", s), 0), 0.5);
  EXPECT_DOUBLE_EQ(at(parse_expr("2^3^2", s), 0), 64.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("1.5e1 + .5", s), 0), 15.5);
}

TEST(Expr, VariablesAndFunctions) {
  const auto s = ExprScope::dynamics(2, 1);
  const Expr e = parse_expr("x1 * u1 + sin(t) - x2^2 + sqrt(abs(x1)) + exp(0) + cos(0)", s);
  const double t = 0.3, x1 = -4.0, x2 = 0.5, u = 2.0;
  EXPECT_NEAR(at(e, t, {x1, x2}, {u}), x1 * u + std::sin(t) - x2 * x2 + 2.0 + 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(at(parse_expr("sign(x1)", s), 0, {-3, 0}), -1.0);
}

TEST(Expr, ScopeErrors) {
  EXPECT_THROW(parse_expr("x3", ExprScope::dynamics(2, 1)), ParseError);
  EXPECT_THROW(parse_expr("u2", ExprScope::dynamics(2, 1)), ParseError);
  EXPECT_THROW(parse_expr("z1", ExprScope::dynamics(2, 1)), ParseError);
  EXPECT_THROW(parse_expr("t", ExprScope::endpoints(2)), ParseError);
  EXPECT_THROW(parse_expr("x1", ExprScope::endpoints(2)), ParseError);
  EXPECT_NO_THROW(parse_expr("y1 + z2", ExprScope::endpoints(2)));
}

TEST(Expr, SyntaxErrors) {
  const auto s = ExprScope::dynamics(1, 1);
  EXPECT_THROW(parse_expr("x1^0.5", s), ParseError);
  EXPECT_THROW(parse_expr("x1^u1", s), ParseError);
  EXPECT_THROW(parse_expr("(x1", s), ParseError);
  EXPECT_THROW(parse_expr("x1 +", s), ParseError);
  EXPECT_THROW(parse_expr("sin x1", s), ParseError);
  EXPECT_THROW(parse_expr("sin(x1, u1)", s), ParseError);
  EXPECT_THROW(parse_expr("x1(2)", s), ParseError);
  EXPECT_THROW(parse_expr("foo", s), ParseError);
  try {
    parse_expr("x1 + $", s);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 5u);
  }
}

TEST(Expr, DomainErrorsCarrySubexpression) {
  const auto s = ExprScope::dynamics(1, 0);
  try {
    at(parse_expr("1 + sqrt(x1)", s), 0, {-1.0});
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(e.subexpression().find("sqrt"), std::string::npos);
  }
  EXPECT_THROW(at(parse_expr("1 / x1", s), 0, {0.0}), DomainError);
  EXPECT_THROW(at(parse_expr("x1^-2", s), 0, {0.0}), DomainError);
}

TEST(Expr, PrintedFormReparses) {
  const auto s = ExprScope::dynamics(3, 2);
  for (const char* src : {"x1 - (x2 - x3)", "-(x1 * u2)^3", "4*u1^2 - 3*u1^3", "(x1 - x2)^2",
                          "sin(t) / (1 + x1^2)", "-2.5e-3 * abs(u1)"}) {
    const Expr e = parse_expr(src, s);
    EXPECT_EQ(parse_expr(e.str(), s), e) << src << " -> " << e.str();
  }
}

TEST(Expr, DerivativeMatchesCentralDifferences) {
  const auto s = ExprScope::dynamics(2, 1);
  const Expr e = parse_expr("sin(x1 * u1) + x2^3 / (1 + x1^2) + exp(-t * x2) + sqrt(1 + u1^2)", s);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const double t = d(rng), x1 = d(rng), x2 = d(rng), u = d(rng);
    const double dx1 = at(differentiate(e, {VarKind::State, 0}), t, {x1, x2}, {u});
    const double du = at(differentiate(e, {VarKind::Control, 0}), t, {x1, x2}, {u});
    const double dt = at(differentiate(e, {VarKind::Time, 0}), t, {x1, x2}, {u});
    const double fx1 = oracle::central_diff([&](double v) { return at(e, t, {v, x2}, {u}); }, x1);
    const double fu = oracle::central_diff([&](double v) { return at(e, t, {x1, x2}, {v}); }, u);
    const double ft = oracle::central_diff([&](double v) { return at(e, v, {x1, x2}, {u}); }, t);
    EXPECT_NEAR(dx1, fx1, 1e-6 * std::max(1.0, std::fabs(fx1)));
    EXPECT_NEAR(du, fu, 1e-6 * std::max(1.0, std::fabs(fu)));
    EXPECT_NEAR(dt, ft, 1e-6 * std::max(1.0, std::fabs(ft)));
  }
}

TEST(Expr, AbsKinkUsesZeroSubgradient) {
  const auto s = ExprScope::dynamics(1, 0);
  const Expr d = differentiate(parse_expr("abs(x1)", s), {VarKind::State, 0});
  EvalFlags flags;
  const std::vector<double> x{0.0};
  EXPECT_EQ(d.eval(EvalPoint{0, x, {}, {}, {}}, &flags), 0.0);
  EXPECT_TRUE(flags.abs_kink);
  EvalFlags clean;
  const std::vector<double> y{2.0};
  EXPECT_EQ(d.eval(EvalPoint{0, y, {}, {}, {}}, &clean), 1.0);
  EXPECT_FALSE(clean.abs_kink);
}

TEST(Expr, ConstantFoldingInFactories) {
  EXPECT_TRUE((Expr::constant(2) * Expr::constant(3)).is_constant());
  EXPECT_TRUE(differentiate(parse_expr("x1", ExprScope::dynamics(1, 0)), {VarKind::State, 0}).is_constant());
  const Expr x = Expr::variable({VarKind::State, 0});
  EXPECT_EQ(x + Expr::constant(0), x);
  EXPECT_TRUE((x * Expr::constant(0)).is_zero());
}

TEST(Expr, SubstituteReplacesVariables) {
  const auto s = ExprScope::dynamics(1, 2);
  const Expr e = parse_expr("u1 * x1 + u2", s);
  const Expr r = substitute(e, [](Variable v) -> std::optional<Expr> {
    if (v.kind == VarKind::Control && v.index == 0) return Expr::constant(2.0);
    return std::nullopt;
  });
  EXPECT_DOUBLE_EQ(at(r, 0, {3.0}, {100.0, 1.0}), 2.0 * 3.0 + 1.0);
  EXPECT_EQ(r.max_index(VarKind::Control), 2);
}

TEST(Expr, TimeFunctionsDifferentiate) {
  const auto f = PiecewisePolynomial::parse("0 0.25 0.5");
  const Expr e = Expr::time_function(f) * Expr::variable({VarKind::State, 0});
  const Expr de = differentiate(e, {VarKind::Time, 0});
  EXPECT_NEAR(at(de, 0.5, {2.0}), (0.25 + 1.0 * 0.5) * 2.0, 1e-14);
  EXPECT_TRUE(e.references(VarKind::Time));
}

TEST(Expr, ReferencesAndMaxIndex) {
  const Expr e = parse_expr("x3 + u2 * t", ExprScope::dynamics(3, 2));
  EXPECT_EQ(e.max_index(VarKind::State), 3);
  EXPECT_EQ(e.max_index(VarKind::Control), 2);
  EXPECT_TRUE(e.references(VarKind::Time));
  EXPECT_FALSE(parse_expr("x1", ExprScope::dynamics(1, 0)).references(VarKind::Time));
}
