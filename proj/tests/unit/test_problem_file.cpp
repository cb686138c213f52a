#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <relaxoc/catalog.hpp>
#include <relaxoc/problem_file.hpp>

using namespace relaxoc;

namespace {

const char* kBase = R"([dynamics]
n = 1
r = 1
phi1 = u1

[endpoints]
f0 = z1

[control_set]
type = box
lower = -1
upper = 1
)";

std::string with(const std::string& extra) { return std::string(kBase) + extra; }

}  // namespace

TEST(ProblemFile, FileMatchesTheCatalogProblem) {
  const auto pf = load_problem(RELAXOC_TEST_DATA "/example4.ini");
  const auto cat = catalog_problem("example4");
  EXPECT_EQ(pf.problem.name(), "example4");
  EXPECT_EQ(pf.problem.n(), 3);
  EXPECT_EQ(pf.problem.endpoints().m2(), cat.endpoints().m2());
  ASSERT_EQ(pf.problem.U().points().size(), 4u);
  EXPECT_DOUBLE_EQ(pf.problem.U().points()[1](0), 1.0 / 3.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-2, 2);
  for (int k = 0; k < 20; ++k) {
    Vec x(3), u(1);
    x << d(rng), d(rng), d(rng);
    u << d(rng);
    EXPECT_LT((pf.problem.dynamics().rhs(0.5, x, u) - cat.dynamics().rhs(0.5, x, u)).norm(), 1e-14);
    Vec y(3);
    y << d(rng), d(rng), d(rng);
    EXPECT_NEAR(pf.problem.endpoints().eval_f0(y, x).value(0), cat.endpoints().eval_f0(y, x).value(0), 1e-14);
  }
  ASSERT_TRUE(pf.triple.has_value());
  EXPECT_DOUBLE_EQ(pf.triple->weights(1), 1.0 / 16.0);
  EXPECT_EQ(pf.triple->controls.size(), 3u);
  EXPECT_EQ(pf.triple->xi, Vec::Zero(3));
}

TEST(ProblemFile, DefaultsAndOptionalSections) {
  const auto pf = parse_problem(kBase, "p");
  EXPECT_EQ(pf.problem.t0(), 0.0);
  EXPECT_EQ(pf.problem.t1(), 1.0);
  EXPECT_FALSE(pf.problem.x0().has_value());
  EXPECT_FALSE(pf.triple.has_value());
  const auto timed = parse_problem(with("[time]\nt0 = 1\nt1 = 2.5\n"));
  EXPECT_EQ(timed.problem.t1(), 2.5);
}

TEST(ProblemFile, IntervalUnionWithInfiniteEnds) {
  std::string text = kBase;
  text.replace(text.find("type = box"), std::string::npos, "type = intervals\nintervals = -inf -1; 1 inf\n");
  const auto pf = parse_problem(text);
  ASSERT_EQ(pf.problem.U().intervals().size(), 2u);
  EXPECT_TRUE(std::isinf(pf.problem.U().intervals()[0].lo));
  EXPECT_FALSE(pf.problem.U().bounded());
}

TEST(ProblemFile, TimeDependentTripleControl) {
  const auto pf = parse_problem(with("[triple]\ncontrol1 = sin(t)\n"));
  ASSERT_TRUE(pf.triple.has_value());
  EXPECT_NEAR(pf.triple->controls[0](0.3)(0), std::sin(0.3), 1e-15);
  EXPECT_FALSE(pf.triple->controls[0].is_constant_piece(0));
  EXPECT_EQ(pf.triple->weights(0), 1.0);
}

TEST(ProblemFile, RejectsMalformedInput) {
  const std::vector<std::string> bad = {
      with("[extra]\na = 1\n"),
      with("[time]\nt0 = 1\nt1 = 0\n"),
      with("[time]\nt2 = 1\n"),
      with("[triple]\ncontrol1 = 1\ncontrol2 = 0\n"),
      with("[triple]\ncontrol1 = 1\ncontrol2 = 0\nweights = 0.6 0.6\n"),
      with("[triple]\ncontrol1 = x1\n"),
      with("[triple]\nxi = 0\n"),
      with("[triple]\ncontrol1 = 1\nxi = 0 0\n"),
      std::string(kBase).replace(std::string(kBase).find("n = 1"), 5, "n = 0"),
      std::string(kBase).replace(std::string(kBase).find("n = 1"), 5, "n = 2"),
      std::string(kBase).replace(std::string(kBase).find("phi1 = u1"), 9, "phi1 = u1 +"),
      std::string(kBase).replace(std::string(kBase).find("phi1 = u1"), 9, "phi1 = u2"),
      std::string(kBase).replace(std::string(kBase).find("f0 = z1"), 7, "f0 = x1"),
      std::string(kBase).replace(std::string(kBase).find("f0 = z1"), 7, "g1 = z1"),
      std::string(kBase).replace(std::string(kBase).find("type = box"), 10, "type = ball"),
      std::string(kBase).replace(std::string(kBase).find("upper = 1"), 9, "upper = t"),
      std::string(kBase).replace(std::string(kBase).find("lower = -1"), 10, "lower = 2"),
      std::string(kBase).replace(std::string(kBase).find("[endpoints]"), 11, "[endpoints]\nh1 = z1"),
      std::string(kBase).replace(std::string(kBase).find("[endpoints]"), 11, "[endpoints]\nx0 = 0 0"),
      "[dynamics\nn = 1\n",
      "",
  };
  for (const auto& text : bad) EXPECT_THROW(parse_problem(text), ConfigError) << text;
  EXPECT_THROW(load_problem(RELAXOC_TEST_DATA "/missing.ini"), ConfigError);
}

TEST(ProblemFile, ConstantExpressionsAsNumbers) {
  const auto pf = parse_problem(with("[time]\nt1 = 2/3 + 1/3\n[triple]\ncontrol1 = 1/2\nxi = -1/4\n"));
  EXPECT_DOUBLE_EQ(pf.problem.t1(), 1.0);
  EXPECT_DOUBLE_EQ(pf.triple->xi(0), -0.25);
  EXPECT_TRUE(pf.triple->controls[0].is_constant_piece(0));
  EXPECT_DOUBLE_EQ(pf.triple->controls[0](0.5)(0), 0.5);
}
