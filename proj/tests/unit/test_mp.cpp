#include <gtest/gtest.h>

#include <cmath>

#include <relaxoc/catalog.hpp>
#include <relaxoc/mp.hpp>
#include <relaxoc/scenarios.hpp>

#include "oracles.hpp"

using namespace relaxoc;

namespace {

RowVec row(std::initializer_list<double> v) {
  RowVec r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) r(i++) = a;
  return r;
}

Vec col(std::initializer_list<double> v) { return row(v).transpose(); }

}  // namespace

TEST(Hamiltonian, IsCostateDotVelocity) {
  const auto prob = catalog_problem("example4");
  const Vec x = col({0.2, -0.1, 0.0});
  const Vec u = col({3.0});
  const RowVec p = row({0.5, -2.0, 1.5});
  const double expect = 0.5 * 3.0 - 2.0 * (4 * 9.0 - 3 * 27.0) + 1.5 * 0.09;
  EXPECT_NEAR(hamiltonian(prob, p, 0.1, x, u), expect, 1e-14);
}

TEST(Hamiltonian, FiniteSetArgmaxAndTies) {
  const auto prob = catalog_problem("example4");
  const Vec x = Vec::Zero(3);
  const auto tie = maximize_hamiltonian(prob, row({0, 0, 0}), 0.0, x);
  EXPECT_EQ(tie.u_star, prob.U().points().front());
  EXPECT_EQ(tie.value, 0.0);
  // p1 u alone: the largest point wins, the smallest for p1 < 0.
  EXPECT_EQ(maximize_hamiltonian(prob, row({1, 0, 0}), 0.0, x).u_star(0), 3.0);
  EXPECT_EQ(maximize_hamiltonian(prob, row({-1, 0, 0}), 0.0, x).u_star(0), -1.0);
  // 4u^2 - 3u^3 takes the values 7, 1/3, 1, -45 on the points.
  EXPECT_EQ(maximize_hamiltonian(prob, row({0, 1, 0}), 0.0, x).u_star(0), -1.0);
  EXPECT_EQ(maximize_hamiltonian(prob, row({0, -1, 0}), 0.0, x).u_star(0), 3.0);
  EXPECT_EQ(maximize_hamiltonian(prob, row({-6, 1, 0}), 0.0, x).u_star(0), -1.0);
  EXPECT_EQ(maximize_hamiltonian(prob, row({3, 0.5, 0}), 0.0, x).u_star(0), 1.0);
}

TEST(Hamiltonian, IntervalUnionConcaveCase) {
  // Example 1 with p2 = -1: H = p1 u - (x1 - f)^2 - u^2, maximized at p1/2
  // when |p1| >= 2 and at the nearer end of the gap otherwise.
  const auto prob = catalog_problem("example1");
  const Vec x = col({0.0, 0.0});
  const auto a = maximize_hamiltonian(prob, row({5.0, -1.0}), 0.0, x);
  EXPECT_NEAR(a.u_star(0), 2.5, 1e-10);
  EXPECT_NEAR(a.value, 6.25, 1e-12);
  EXPECT_FALSE(a.boundary_flag);
  EXPECT_NEAR(maximize_hamiltonian(prob, row({0.5, -1.0}), 0.0, x).u_star(0), 1.0, 1e-15);
  EXPECT_NEAR(maximize_hamiltonian(prob, row({-0.5, -1.0}), 0.0, x).u_star(0), -1.0, 1e-15);
  EXPECT_NEAR(maximize_hamiltonian(prob, row({0.0, -1.0}), 0.0, x).u_star(0), -1.0, 1e-15);
}

TEST(Hamiltonian, UnboundedSupremumHitsTheWindow) {
  const auto prob = catalog_problem("example3");  // H = p u on R
  MpOptions o;
  o.window = 50.0;
  const auto a = maximize_hamiltonian(prob, row({1.0}), 0.0, Vec::Zero(1), o);
  EXPECT_TRUE(a.boundary_flag);
  EXPECT_EQ(a.u_star(0), 50.0);
  const auto left = maximize_hamiltonian(prob, row({-2.0}), 0.0, Vec::Zero(1), o);
  EXPECT_TRUE(left.boundary_flag);
  EXPECT_EQ(left.u_star(0), -50.0);
  EXPECT_EQ(left.value, 100.0);
  o.strict = true;
  EXPECT_THROW(maximize_hamiltonian(prob, row({1.0}), 0.0, Vec::Zero(1), o), WindowBoundaryError);
}

TEST(Multipliers, TupleHelpers) {
  MultiplierTuple t;
  t.lambda0 = 0.5;
  t.lambda_f = col({0.25});
  t.lambda_g = col({-0.25});
  EXPECT_DOUBLE_EQ(t.l1(), 1.0);
  EXPECT_EQ(t.stacked(), col({0.5, 0.25, -0.25}));
  EXPECT_DOUBLE_EQ(t.scaled(2).lambda_g(0), -0.5);
  EXPECT_FALSE(t.is_zero());
}

TEST(Residuals, NormalMultiplierOfFirstExample) {
  const auto prob = catalog_problem("example1");
  const auto f = PiecewisePolynomial::parse("0 0.5");
  const auto grid = TimeGrid::uniform(0, 1, 801);
  const auto triple = example1_triple(prob, f, grid);
  const auto search = find_multipliers(prob, triple, Lambda0Mode::Free, MpOptions{});
  ASSERT_FALSE(search.found.empty());
  const auto& best = search.found.front();
  ASSERT_GT(best.tuple.lambda0, 0.0);
  const auto res = condition_residuals(prob, triple, best.tuple.scaled(1.0 / best.tuple.lambda0));
  EXPECT_LE(res.worst(), 1e-6);
  for (std::size_t i = 0; i < grid.size(); i += 100) {
    EXPECT_NEAR(res.p.at(i)(0), 0.0, 1e-8);
    EXPECT_NEAR(res.p.at(i)(1), -1.0, 1e-8);
  }
  EXPECT_FALSE(res.boundary_flag);
}

TEST(Residuals, ZeroTupleIsRejected) {
  const auto prob = catalog_problem("example4");
  const auto triple = example4_triple(prob, TimeGrid::uniform(0, 1, 101));
  MultiplierTuple z;
  z.lambda_f = Vec(0);
  z.lambda_g = Vec::Zero(4);
  EXPECT_THROW(condition_residuals(prob, triple, z), ModelError);
}

TEST(Residuals, WrongMultiplierShowsUp) {
  const auto prob = catalog_problem("example4");
  const auto triple = example4_triple(prob, TimeGrid::uniform(0, 1, 201));
  MultiplierTuple t;
  t.lambda0 = 1.0;
  t.lambda_f = Vec(0);
  t.lambda_g = Vec::Zero(4);
  // p(1) = (0, 0, 0) here, so only the transversality at t0 rows can fail:
  // either way the residual should be reported, not thrown.
  EXPECT_NO_THROW(condition_residuals(prob, triple, t));
  t.lambda_g = col({0.3, 0.0, 0.0, 0.0});
  EXPECT_GT(condition_residuals(prob, triple, t).transversality_t0, 0.1);
}

TEST(Regularity, FourthExampleIsNotRegular) {
  const auto prob = catalog_problem("example4");
  const auto triple = example4_triple(prob, TimeGrid::uniform(0, 1, 401));
  const auto v = regularity_check(prob, triple);
  EXPECT_FALSE(v.regular);
  ASSERT_TRUE(v.witness.has_value());
  EXPECT_EQ(v.witness->tuple.lambda0, 0.0);
  EXPECT_NEAR(v.witness->tuple.l1(), 1.0, 1e-9);
  EXPECT_LE(v.witness->residuals.worst(), 1e-7);
  EXPECT_FALSE(v.certificate.empty());
}

TEST(Regularity, GridOracleAgreesOnFourthExample) {
  const auto prob = catalog_problem("example4");
  const auto triple = example4_triple(prob, TimeGrid::uniform(0, 1, 201));
  const auto hits = oracle::l1_grid_multipliers(prob, triple, 4, true, 1e-7);
  ASSERT_FALSE(hits.empty());
  for (const auto& h : hits) {
    // Only the x3 rows can carry weight: p = (0, 0, c).
    EXPECT_EQ(h.tuple.lambda_g(0), 0.0);
    EXPECT_EQ(h.tuple.lambda_g(1), 0.0);
    EXPECT_DOUBLE_EQ(std::fabs(h.tuple.lambda_g(2)), 0.5);
    EXPECT_DOUBLE_EQ(std::fabs(h.tuple.lambda_g(3)), 0.5);
  }
  const auto v = regularity_check(prob, triple);
  ASSERT_TRUE(v.witness.has_value());
  const Vec g = v.witness->tuple.lambda_g;
  EXPECT_LE(std::fabs(g(0)) + std::fabs(g(1)), 1e-9);
  EXPECT_NEAR(std::fabs(g(2)), std::fabs(g(3)), 1e-9);
}

TEST(Regularity, FirstExampleIsRegularAndGridOracleAgrees) {
  const auto prob = catalog_problem("example1");
  const auto f = PiecewisePolynomial::parse("0 0.5");
  const auto triple = example1_triple(prob, f, TimeGrid::uniform(0, 1, 201));
  EXPECT_TRUE(regularity_check(prob, triple).regular);
  EXPECT_TRUE(oracle::l1_grid_multipliers(prob, triple, 6, true, 1e-6).empty());
  const auto normal = oracle::l1_grid_multipliers(prob, triple, 4, false, 1e-6);
  for (const auto& h : normal) EXPECT_GT(h.tuple.lambda0, 0.0);
}
