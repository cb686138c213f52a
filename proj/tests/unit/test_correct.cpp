#include <gtest/gtest.h>

#include <cmath>

#include <relaxoc/catalog.hpp>
#include <relaxoc/correct.hpp>
#include <relaxoc/problem_file.hpp>
#include <relaxoc/scenarios.hpp>

using namespace relaxoc;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Mat m1(double a) { return Mat::Constant(1, 1, a); }

RelaxedControl example1_weights(const TimeGrid& g, double w) {
  RowVec a(2);
  a << w, 1.0 - w;
  return RelaxedControl::constant_weights(
      {PiecewiseControl::constant(0, 1, v1(1.0)), PiecewiseControl::constant(0, 1, v1(-1.0))}, g, a);
}

}  // namespace

TEST(ModifiedNewton, ScalarQuadraticMatchesFixedPointOracle) {
  const FrozenOperator A(m1(6.0));
  const auto r = modified_newton([](const Vec& x) { return v1(x(0) * x(0) - 4.0); }, A, v1(3.0), 1e-12, 40);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.status, CorrectionStatus::Converged);
  EXPECT_NEAR(r.params(0), 2.0, 1e-10);
  EXPECT_LE(r.iterations, 40);
  EXPECT_LE(r.max_contraction, 0.7);
  double x = 3.0;
  for (int i = 0; i < r.iterations; ++i) x -= (x * x - 4.0) / 6.0;
  EXPECT_NEAR(r.params(0), x, 1e-15);
  ASSERT_EQ(r.trace.size(), static_cast<std::size_t>(r.iterations + 1));
  EXPECT_DOUBLE_EQ(r.trace.front(), 5.0);
  EXPECT_EQ(r.trace_csv().rfind("iter,residual_norm\r\n", 0), 0u);
  EXPECT_EQ(r.to_json()["status"], "converged");
}

TEST(ModifiedNewton, ZeroResidualTakesNoSteps) {
  const FrozenOperator A(m1(6.0));
  const auto r = modified_newton([](const Vec& x) { return v1(x(0) * x(0) - 4.0); }, A, v1(2.0), 1e-12, 40);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.params(0), 2.0);
}

TEST(ModifiedNewton, LinearResidualConvergesInOneStep) {
  Mat A(2, 3);
  A << 1, 2, 0, 0, -1, 3;
  Vec b(2);
  b << 4, -2;
  const FrozenOperator op(A);
  const auto r = modified_newton([&](const Vec& x) { Vec v = A * x - b; return v; }, op, Vec::Zero(3), 1e-12, 10);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_LE((A * r.params - b).norm(), 1e-14);
  // Least-norm step from the origin lies in the row space of A.
  const Vec pinv = A.transpose() * (A * A.transpose()).ldlt().solve(b);
  EXPECT_LT((r.params - pinv).norm(), 1e-14);
  EXPECT_LE(op.reconstruction_error(), 1e-10);
}

TEST(ModifiedNewton, WrongSignIsDetectedAsDivergence) {
  const FrozenOperator A(m1(-6.0));
  const auto r = modified_newton([](const Vec& x) { return v1(x(0) * x(0) - 4.0); }, A, v1(3.0), 1e-12, 50);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.status, CorrectionStatus::Diverged);
  EXPECT_LT(r.iterations, 50);
  EXPECT_STREQ(to_string(r.status), "diverged");
}

TEST(ModifiedNewton, IterationLimit) {
  const FrozenOperator A(m1(60.0));  // slow but contracting
  const auto r = modified_newton([](const Vec& x) { return v1(x(0) * x(0) - 4.0); }, A, v1(3.0), 1e-14, 3);
  EXPECT_EQ(r.status, CorrectionStatus::MaxIterations);
  EXPECT_EQ(r.iterations, 3);
}

TEST(FrozenOperator, RejectsSingularAndMalformed) {
  EXPECT_THROW(FrozenOperator{Mat()}, ModelError);
  EXPECT_THROW(FrozenOperator{Mat::Zero(1, 2)}, ModelError);
  EXPECT_THROW(FrozenOperator{Mat::Ones(3, 2)}, ModelError);
  Mat A(2, 2);
  A << 1, 2, 2, 4;
  EXPECT_THROW(FrozenOperator{A}, ModelError);
  A(0, 0) = std::nan("");
  EXPECT_THROW(FrozenOperator{A}, ModelError);
}

TEST(Corrector, PanelAlignmentKeepsTheControl) {
  const auto g = TimeGrid::uniform(0, 1, 14);  // panel boundaries are not nodes
  const auto rc = example1_weights(g, 0.7);
  const auto al = panel_aligned(rc, 8);
  for (int p = 1; p < 8; ++p)
    EXPECT_NE(std::find(al.grid().nodes().begin(), al.grid().nodes().end(), p / 8.0), al.grid().nodes().end());
  for (std::size_t q = 0; q + 1 < al.grid().size(); ++q) {
    const double mid = 0.5 * (al.grid()[q] + al.grid()[q + 1]);
    EXPECT_EQ(panel_of(al, q, 8), static_cast<int>(mid * 8));
    EXPECT_EQ(al.weights_at(mid), rc.weights_at(mid));
  }
}

TEST(Corrector, SensitivityMatchesFiniteDifferences) {
  const auto prob = catalog_problem("example1");
  const auto g = TimeGrid::uniform(0, 1, 801);
  const auto rc = panel_aligned(example1_weights(g, 0.7), 8);
  CorrectionOptions o;
  const auto par = make_parametrization(prob, rc, Vec::Zero(2), o);
  ASSERT_EQ(par.dim(), 8);
  const Mat S = relaxed_sensitivity(prob, rc, Vec::Zero(2), par, rc.grid());
  const double eps = 1e-6;
  for (int j = 0; j < par.dim(); ++j) {
    Vec th = Vec::Zero(par.dim());
    th(j) = eps;
    auto res = [&](const Vec& t) {
      const auto c = perturbed_control(rc, par, t);
      return endpoint_residual(prob, par, integrate_relaxed(prob, c, perturbed_xi(Vec::Zero(2), par, t), rc.grid()));
    };
    const Vec fd = (res(th) - res(-th)) / (2 * eps);
    const double scale = std::max(1e-12, fd.cwiseAbs().maxCoeff());
    EXPECT_LE((S.col(j) - fd).cwiseAbs().maxCoeff() / std::max(scale, S.col(j).cwiseAbs().maxCoeff()), 1e-3)
        << "column " << j;
  }
  // The x1(1) row moves by 2 / 8 per unit panel shift of the u = +1 weight.
  const int last = static_cast<int>(par.rows.size()) - 1;
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(S(last, j), 0.25, 1e-12);
}

TEST(Corrector, PerturbedFirstExampleReachesTheTarget) {
  // Weights 0.7 / 0.3 give x1(1) = 0.4 instead of f(1) = 0.5.
  const auto prob = catalog_problem("example1");
  const auto g = TimeGrid::uniform(0, 1, 2001);
  const auto ec = correct_endpoints(prob, example1_weights(g, 0.7), Vec::Zero(2), 64);
  ASSERT_TRUE(ec.result.converged) << ec.message;
  EXPECT_LE(ec.result.residual_norm, 1e-8);
  EXPECT_NEAR(ec.x.terminal()(0), 0.5, 1e-8);
  EXPECT_GE(ec.x.terminal()(1), 1.0);
  EXPECT_TRUE(ec.admissibility.admissible(1e-6));
  // x1 has to move by 0.1 at t = 1, plus chattering ripple of order 1/s.
  EXPECT_GE(ec.sup_distance, 0.1 - 1e-8);
  EXPECT_LE(ec.sup_distance, 0.1 + 1.0 / 64);
  EXPECT_GE(ec.result.iterations, 1);
}

TEST(Corrector, SlidingFirstExampleNeedsNoSteps) {
  const auto prob = catalog_problem("example1");
  const auto f = PiecewisePolynomial::parse("0 0.5");
  const auto g = TimeGrid::uniform(0, 1, 2001);
  const auto triple = example1_triple(prob, f, g);
  const auto ec = correct_endpoints(prob, triple.rc, Vec::Zero(2), 64);
  ASSERT_TRUE(ec.result.converged);
  EXPECT_EQ(ec.result.iterations, 0);
  EXPECT_LE(std::fabs(ec.x.terminal()(0) - 0.5), 1e-8);
}

TEST(Corrector, FourthExampleIsRankDeficient) {
  // The x3(1) row has no first-order sensitivity at the zero trajectory.
  const auto prob = catalog_problem("example4");
  const auto g = TimeGrid::uniform(0, 1, 1001);
  const auto triple = example4_triple(prob, g);
  CorrectionOptions o;
  o.grid_nodes = 1001;
  const auto ec = correct_endpoints(prob, triple.rc, Vec::Zero(3), 64, o);
  EXPECT_FALSE(ec.result.converged);
  EXPECT_EQ(ec.result.status, CorrectionStatus::RankDeficient);
  EXPECT_NE(ec.message.find("zero sensitivity"), std::string::npos);
  EXPECT_GT(ec.x.terminal()(2), 0.0);
}

TEST(Corrector, FreeInitialStateFromProblemFile) {
  const auto pf = load_problem(RELAXOC_TEST_DATA "/free_start.ini");
  ASSERT_TRUE(pf.triple.has_value());
  const auto g = TimeGrid::uniform(0, 1, 201);
  CorrectionOptions o;
  o.free_xi = {0};
  o.grid_nodes = 201;
  const auto ec = correct_endpoints(pf.problem, pf.triple->relaxed(g), pf.triple->xi, 4, o);
  ASSERT_TRUE(ec.result.converged) << ec.message;
  EXPECT_NEAR(ec.xi(0), 0.5, 1e-10);
  EXPECT_NEAR(ec.x.terminal()(0), 1.0, 1e-8);
  EXPECT_EQ(ec.result.iterations, 1);  // linear in xi
}

TEST(Corrector, WeightShiftsMeetEqualityAndInactiveInequality) {
  const auto pf = load_problem(RELAXOC_TEST_DATA "/two_rates.ini");
  const auto g = TimeGrid::uniform(0, 1, 1001);
  CorrectionOptions o;
  o.grid_nodes = 1001;
  const auto ec = correct_endpoints(pf.problem, pf.triple->relaxed(g), pf.triple->xi, 32, o);
  ASSERT_TRUE(ec.result.converged) << ec.message;
  EXPECT_EQ(ec.parametrization.active_f, 0);  // f1 = z1 - 1 < 0
  EXPECT_NEAR(ec.x.terminal()(0), 0.25, 1e-8);
  EXPECT_TRUE(ec.admissibility.admissible(1e-6));
  EXPECT_EQ(ec.u.max_set_distance(pf.problem.U(), {0.1, 0.3, 0.7}), 0.0);
}
