#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <relaxoc/catalog.hpp>
#include <relaxoc/integrate.hpp>

#include "oracles.hpp"

using namespace relaxoc;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

ControlProblem pendulum() {
  const auto s = ExprScope::dynamics(2, 1);
  const auto e = ExprScope::endpoints(2);
  return ControlProblem("pendulum",
                        DynamicsModel(2, 1, {parse_expr("x2", s), parse_expr("-sin(x1) + u1 * cos(t)", s)}),
                        parse_expr("z1", e), {}, {}, ControlSet::box(v1(-1), v1(1)), 0.0, 2.0);
}

RelaxedControl example4_relaxed(const TimeGrid& g) {
  std::vector<PiecewiseControl> u;
  for (double v : {-1.0, 3.0, 1.0 / 3.0}) u.push_back(PiecewiseControl::constant(0, 1, v1(v)));
  RowVec w(3);
  w << 3.0 / 8.0, 1.0 / 16.0, 9.0 / 16.0;
  return RelaxedControl::constant_weights(u, g, w);
}

}  // namespace

TEST(PiecewiseControl, LeftContinuousPieces) {
  PiecewiseControl u({0.0, 0.5, 1.0}, {Vec(v1(1.0)), PiecewiseControl::Fn([](double t) { return v1(t); })}, 1);
  EXPECT_EQ(u(0.0)(0), 1.0);
  EXPECT_EQ(u(0.5)(0), 1.0);
  EXPECT_EQ(u(0.75)(0), 0.75);
  EXPECT_EQ(u.piece_for_step(0.4, 0.5), 0u);
  EXPECT_EQ(u.piece_for_step(0.5, 0.6), 1u);
  EXPECT_EQ(u.interior_breakpoints(), std::vector<double>{0.5});
  EXPECT_TRUE(u.is_constant_piece(0));
  EXPECT_FALSE(u.is_constant_piece(1));
  EXPECT_THROW(PiecewiseControl({0.0, 1.0}, {Vec(Vec::Zero(2))}, 1), ModelError);
  EXPECT_THROW(PiecewiseControl({0.0, 1.0, 0.5}, {Vec(v1(0)), Vec(v1(0))}, 1), ModelError);
}

TEST(RelaxedControl, WeightsMustLieOnTheSimplex) {
  const auto g = TimeGrid::uniform(0, 1, 3);
  std::vector<PiecewiseControl> u{PiecewiseControl::constant(0, 1, v1(1)), PiecewiseControl::constant(0, 1, v1(-1))};
  Mat W(3, 2);
  W << 0.5, 0.5, 0.7, 0.3, 1.2, -0.2;
  EXPECT_THROW(RelaxedControl(u, g, W), ModelError);
  W.row(2) << 0.6, 0.5;
  EXPECT_THROW(RelaxedControl(u, g, W), ModelError);
  W.row(2) << 0.25, 0.75;
  const RelaxedControl rc(u, g, W);
  EXPECT_EQ(rc.weight_row(0.5), 1u);
  EXPECT_EQ(rc.weights_at(0.49)(0), 0.5);
}

TEST(Integrate, ExactForPiecewiseConstantVelocity) {
  const auto p = catalog_problem("example3");
  PiecewiseControl u({0.0, 0.3, 1.0}, {Vec(v1(2.0)), Vec(v1(-1.0))}, 1);
  const auto g = TimeGrid::uniform(0, 1, 11).refined({0.3});
  const auto x = integrate_state(p, u, Vec::Zero(1), g);
  EXPECT_NEAR(x.terminal()(0), 0.6 - 0.7, 1e-15);
  EXPECT_NEAR(x.at(g.nearest(0.3))(0), 0.6, 1e-15);
}

TEST(Integrate, MatchesIndependentRk4) {
  const auto p = pendulum();
  Vec xi(2);
  xi << 1.0, 0.0;
  const auto u = PiecewiseControl::function(0, 2, 1, [](double t) { return v1(std::sin(3 * t)); });
  const auto g = TimeGrid::uniform(0, 2, 401);
  const auto x = integrate_state(p, u, xi, g);
  const Mat ref = oracle::rk4([&](double t, const Vec& y) { return p.dynamics().rhs(t, y, u(t)); }, xi, 0, 2, 401);
  EXPECT_LT((x.values - ref).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Integrate, FourthOrderConvergence) {
  const auto p = pendulum();
  Vec xi(2);
  xi << 1.0, 0.0;
  const auto u = PiecewiseControl::constant(0, 2, v1(0.5));
  const double ref = integrate_state(p, u, xi, TimeGrid::uniform(0, 2, 20001)).terminal()(0);
  std::vector<double> err;
  for (int m : {21, 41, 81, 161})
    err.push_back(std::fabs(integrate_state(p, u, xi, TimeGrid::uniform(0, 2, m)).terminal()(0) - ref));
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GT(std::log2(err[i - 1] / err[i]), 3.6);
}

TEST(Integrate, SingleComponentRelaxedIsBitwisePlain) {
  const auto p = pendulum();
  Vec xi(2);
  xi << 0.2, 0.1;
  const auto u = PiecewiseControl::function(0, 2, 1, [](double t) { return v1(std::cos(t)); });
  const auto g = TimeGrid::uniform(0, 2, 301);
  const auto a = integrate_state(p, u, xi, g);
  const auto b = integrate_relaxed(p, RelaxedControl::single(u, g), xi, g);
  EXPECT_TRUE(a.values == b.values);
}

TEST(Integrate, RelaxedZeroTrajectory) {
  const auto p = catalog_problem("example4");
  const auto g = TimeGrid::uniform(0, 1, 2001);
  const auto x = integrate_relaxed(p, example4_relaxed(g), Vec::Zero(3), g);
  EXPECT_LE(x.values.cwiseAbs().maxCoeff(), 1e-9);
  Vec x0(3);
  x0 << 0.1, 0.0, 0.0;
  EXPECT_NEAR(relaxed_rhs(p, example4_relaxed(g), 0.5, x0)(2), 0.01, 1e-15);
}

TEST(Integrate, BlowUpRaisesWithNode) {
  const auto s = ExprScope::dynamics(1, 1);
  ControlProblem p("blow", DynamicsModel(1, 1, {parse_expr("x1^2", s)}), parse_expr("z1", ExprScope::endpoints(1)),
                   {}, {}, ControlSet::box(v1(0), v1(1)), 0, 1);
  try {
    integrate_state(p, PiecewiseControl::constant(0, 1, v1(0)), v1(10.0), TimeGrid::uniform(0, 1, 101));
    FAIL();
  } catch (const IntegrationError& e) {
    EXPECT_GT(e.node(), 0u);
    EXPECT_GE(e.t(), 0.09);
  }
}

TEST(Variational, MatchesFiniteDifferencesOfTheFlow) {
  const auto p = catalog_problem("example4");
  const auto g = TimeGrid::uniform(0, 1, 401);
  const RelaxedControl rc = example4_relaxed(g);
  Vec xi(3);
  xi << 0.05, -0.02, 0.0;
  const auto base = integrate_relaxed(p, rc, xi, g);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vec dxi(3);
  dxi << d(rng), d(rng), d(rng);
  Mat da(static_cast<Eigen::Index>(g.size()), 3);
  for (Eigen::Index q = 0; q < da.rows(); ++q) {
    da(q, 0) = 0.1 * d(rng);
    da(q, 1) = 0.02 * d(rng);
    da(q, 2) = -da(q, 0) - da(q, 1);
  }
  const auto v = integrate_variational(p, rc, base, dxi, da);
  const double eps = 1e-6;
  auto shifted = [&](double e) {
    return integrate_relaxed(p, RelaxedControl(rc.controls(), g, rc.weights() + e * da), xi + e * dxi, g);
  };
  const Mat fd = (shifted(eps).values - shifted(-eps).values) / (2 * eps);
  const double rel = (v.values - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff();
  EXPECT_LT(rel, 1e-6);
}

TEST(Variational, ExtraControlsEnterAsForcing) {
  // x' = u: adding weight e on the control u = 2 (taken from the u = 1
  // component) moves x(1) by e.
  const auto p = catalog_problem("example3");
  const auto g = TimeGrid::uniform(0, 1, 11);
  const auto rc = RelaxedControl::single(PiecewiseControl::constant(0, 1, v1(1.0)), g);
  const auto base = integrate_relaxed(p, rc, Vec::Zero(1), g);
  Mat da = Mat::Ones(11, 1);
  const auto v = integrate_variational(p, rc, base, Vec::Zero(1), da, {PiecewiseControl::constant(0, 1, v1(2.0))});
  EXPECT_NEAR(v.terminal()(0), 2.0, 1e-14);
}

TEST(Adjoint, PairingIsConservedForHomogeneousVariations) {
  const auto p = pendulum();
  const auto g = TimeGrid::uniform(0, 2, 2001);
  const auto rc = RelaxedControl::single(PiecewiseControl::function(0, 2, 1, [](double t) { return v1(std::sin(t)); }), g);
  Vec xi(2);
  xi << 1.2, -0.3;
  const auto base = integrate_relaxed(p, rc, xi, g);
  Vec dxi(2);
  dxi << 0.3, 1.0;
  const auto h = integrate_variational(p, rc, base, dxi, Mat());
  RowVec p1(2);
  p1 << -0.7, 2.0;
  const auto a = integrate_adjoint(p, rc, base, p1);
  EXPECT_EQ(a.at(g.size() - 1), p1);
  const double ref = a.at(0).dot(h.at(0).transpose());
  double drift = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) drift = std::max(drift, std::fabs(a.at(i).dot(h.at(i).transpose()) - ref));
  EXPECT_LE(drift, 1e-12);
}

TEST(Trajectory, CsvHeaderAndLineEndings) {
  const auto p = catalog_problem("example3");
  const auto g = TimeGrid::uniform(0, 1, 3);
  const auto x = integrate_state(p, PiecewiseControl::constant(0, 1, v1(1.0)), Vec::Zero(1), g);
  const std::string csv = trajectory_csv(x);
  EXPECT_EQ(csv.rfind("t,x1\r\n", 0), 0u);
  EXPECT_NE(csv.find("0.5,0.5\r\n"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}
