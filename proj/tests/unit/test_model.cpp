#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <relaxoc/model.hpp>

#include "oracles.hpp"

using namespace relaxoc;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(ControlSet, FiniteProjectionPrefersLowestIndexOnTies) {
  const auto U = ControlSet::finite({v1(-1), v1(1), v1(3)});
  EXPECT_EQ(U.project(v1(0)).point(0), -1.0);
  EXPECT_EQ(U.project(v1(2)).point(0), 1.0);
  EXPECT_DOUBLE_EQ(U.project(v1(2.5)).distance, 0.5);
  EXPECT_TRUE(U.contains(v1(3)));
  EXPECT_FALSE(U.contains(v1(0.5)));
  EXPECT_TRUE(U.bounded());
}

TEST(ControlSet, IntervalUnionProjectsToNearestPiece) {
  const auto U = ControlSet::interval_union({{1.0, kInf}, {-kInf, -1.0}});
  EXPECT_EQ(U.intervals().front().hi, -1.0);  // sorted
  EXPECT_EQ(U.project(v1(0.0)).point(0), -1.0);
  EXPECT_EQ(U.project(v1(0.2)).point(0), 1.0);
  EXPECT_EQ(U.project(v1(-7.0)).distance, 0.0);
  EXPECT_FALSE(U.bounded());
  const auto c = U.clipped(10.0);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].lo, -10.0);
  EXPECT_EQ(c[1].hi, 10.0);
  EXPECT_TRUE(ControlSet::interval_union({{20.0, 30.0}}).clipped(10.0).empty());
}

TEST(ControlSet, RejectsOverlapsAndEmptyData) {
  EXPECT_THROW(ControlSet::interval_union({{0.0, 2.0}, {1.0, 3.0}}), ModelError);
  EXPECT_THROW(ControlSet::interval_union({{2.0, 1.0}}), ModelError);
  EXPECT_THROW(ControlSet::finite({}), ModelError);
  EXPECT_THROW(ControlSet::box(Vec::Zero(2), Vec::Constant(2, -1.0)), ModelError);
}

TEST(ControlSet, BoxClampsComponentwise) {
  Vec lo(2), hi(2), u(2);
  lo << -1, 0;
  hi << 1, 2;
  u << 3, -4;
  const auto U = ControlSet::box(lo, hi);
  const auto p = U.project(u);
  EXPECT_EQ(p.point(0), 1.0);
  EXPECT_EQ(p.point(1), 0.0);
  EXPECT_NEAR(p.distance, std::hypot(2.0, 4.0), 1e-15);
}

TEST(TimeGrid, UniformRefinedAndLookup) {
  const auto g = TimeGrid::uniform(0.0, 1.0, 5);
  EXPECT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g[2], 0.5);
  EXPECT_TRUE(g.uniform());
  EXPECT_EQ(g.interval_of(0.25), 1u);  // [0.25, 0.5)
  EXPECT_EQ(g.interval_of(0.2499), 0u);
  EXPECT_EQ(g.interval_of(1.0), 3u);   // clamped to the last interval
  EXPECT_EQ(g.interval_of(-3.0), 0u);
  EXPECT_EQ(g.nearest(0.3), 1u);
  const auto r = g.refined({0.1, 0.5, 0.25 + 1e-14});
  EXPECT_EQ(r.size(), 6u);
  EXPECT_DOUBLE_EQ(r[1], 0.1);
  EXPECT_FALSE(r.uniform());
  EXPECT_THROW(TimeGrid::from_nodes({0.0, 0.0, 1.0}), ModelError);
  EXPECT_THROW(TimeGrid::uniform(0.0, 1.0, 1), ModelError);
}

TEST(DynamicsModel, JacobiansMatchFiniteDifferences) {
  const auto s = ExprScope::dynamics(2, 2);
  DynamicsModel dyn(2, 2, {parse_expr("x2 * u1 + sin(t * x1)", s),
                           parse_expr("x1^2 * u2^3 - exp(x2 * u1)", s)});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  for (int k = 0; k < 50; ++k) {
    const double t = d(rng);
    Vec x(2), u(2);
    x << d(rng), d(rng);
    u << d(rng), d(rng);
    const Mat Jx = dyn.jacobian_x(t, x, u), Ju = dyn.jacobian_u(t, x, u);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double fx = oracle::central_diff([&](double v) { Vec y = x; y(j) = v; return dyn.rhs(t, y, u)(i); }, x(j));
        const double fu = oracle::central_diff([&](double v) { Vec w = u; w(j) = v; return dyn.rhs(t, x, w)(i); }, u(j));
        EXPECT_NEAR(Jx(i, j), fx, 1e-6 * std::max(1.0, std::fabs(fx)));
        EXPECT_NEAR(Ju(i, j), fu, 1e-6 * std::max(1.0, std::fabs(fu)));
      }
    Vec out(2);
    dyn.rhs_into(t, x, u, out);
    EXPECT_EQ(out, dyn.rhs(t, x, u));
  }
}

TEST(DynamicsModel, SecondControlDerivative) {
  const auto s = ExprScope::dynamics(1, 1);
  DynamicsModel dyn(1, 1, {parse_expr("4*u1^2 - 3*u1^3", s)});
  EXPECT_DOUBLE_EQ(dyn.second_u(0, Vec::Zero(1), v1(1.0))(0), 8.0 - 18.0);
}

TEST(DynamicsModel, RejectsOutOfRangeVariables) {
  EXPECT_THROW(DynamicsModel(1, 1, {parse_expr("x2", ExprScope::dynamics(2, 1))}), ModelError);
  EXPECT_THROW(DynamicsModel(2, 1, {parse_expr("x1", ExprScope::dynamics(2, 1))}), ModelError);
}

TEST(ControlProblem, FixedInitialStateBecomesEqualityRows) {
  const auto s = ExprScope::dynamics(2, 1);
  const auto e = ExprScope::endpoints(2);
  Vec x0(2);
  x0 << 0.5, -1.0;
  ControlProblem p("p", DynamicsModel(2, 1, {parse_expr("u1", s), parse_expr("x1", s)}),
                   parse_expr("z2", e), {parse_expr("z1 - 3", e)}, {parse_expr("z1 + z2", e)},
                   ControlSet::box(v1(-1), v1(1)), 0.0, 2.0, x0);
  EXPECT_EQ(p.endpoints().m2(), 3);
  EXPECT_EQ(p.endpoints().m1(), 1);
  Vec z(2);
  z << 1.0, 2.0;
  const auto g = p.endpoints().eval_g(x0, z);
  EXPECT_EQ(g.value(0), 0.0);
  EXPECT_EQ(g.value(1), 0.0);
  EXPECT_EQ(g.value(2), 3.0);
  EXPECT_EQ(g.d_initial(0, 0), 1.0);
  EXPECT_EQ(g.d_terminal(2, 1), 1.0);
  const auto f = p.endpoints().eval_f(x0, z);
  EXPECT_EQ(f.value(0), -2.0);
  EXPECT_THROW(ControlProblem("bad", DynamicsModel(2, 1, {parse_expr("u1", s), parse_expr("x1", s)}),
                              parse_expr("z2", e), {}, {}, ControlSet::box(Vec::Zero(2), Vec::Ones(2)), 0, 1),
               ModelError);
  EXPECT_THROW(ControlProblem("bad", DynamicsModel(2, 1, {parse_expr("u1", s), parse_expr("x1", s)}),
                              parse_expr("z2", e), {}, {}, ControlSet::box(v1(0), v1(1)), 1, 1),
               ModelError);
}
