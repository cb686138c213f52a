#include <gtest/gtest.h>

#include <relaxoc/catalog.hpp>

using namespace relaxoc;

TEST(PiecewisePolynomial, SinglePieceAndValues) {
  const auto f = PiecewisePolynomial::parse("0 0.5");
  EXPECT_EQ(f->pieces(), 1u);
  EXPECT_EQ(f->degree(), 1);
  EXPECT_DOUBLE_EQ(f->value(0.4), 0.2);
  EXPECT_DOUBLE_EQ(f->derivative()->value(0.9), 0.5);
  EXPECT_NO_THROW(validate_fspec(*f));
}

TEST(PiecewisePolynomial, MultiplePieces) {
  const auto f = PiecewisePolynomial::parse("0.5: 0 0.5; 1: 0.5 -0.5");
  EXPECT_EQ(f->pieces(), 2u);
  EXPECT_DOUBLE_EQ(f->value(0.25), 0.125);
  EXPECT_DOUBLE_EQ(f->value(0.75), 0.125);
  EXPECT_DOUBLE_EQ(f->value(0.5), 0.25);
  EXPECT_NO_THROW(validate_fspec(*f));
}

TEST(PiecewisePolynomial, RejectsMalformedText) {
  EXPECT_THROW(PiecewisePolynomial::parse(""), ModelError);
  EXPECT_THROW(PiecewisePolynomial::parse("0 a"), ModelError);
  EXPECT_THROW(PiecewisePolynomial::parse("0.5: 0 1; 0.4: 0 1"), ModelError);
  EXPECT_THROW(PiecewisePolynomial::parse("0.5: 0 0.5; 1: 1 0"), ModelError);  // jump at 0.5
}

TEST(Fspec, HypothesesAreChecked) {
  EXPECT_THROW(validate_fspec(*PiecewisePolynomial::parse("0.1 0.5")), ModelError);   // f(0) != 0
  EXPECT_THROW(validate_fspec(*PiecewisePolynomial::parse("0 1")), ModelError);       // slope 1
  EXPECT_THROW(validate_fspec(*PiecewisePolynomial::parse("0 -1")), ModelError);      // slope -1
  EXPECT_THROW(validate_fspec(*PiecewisePolynomial::parse("0 0 1")), ModelError);     // |f'| up to 2
  EXPECT_NO_THROW(validate_fspec(*PiecewisePolynomial::parse("0")));
  EXPECT_NO_THROW(validate_fspec(*PiecewisePolynomial::parse("0 0 0.5")));           // |f'| = 1 at t = 1 only
  EXPECT_THROW(catalog_problem("example1", {"0 1", "3*u1", 0.5}), ModelError);
}

TEST(Catalog, Example1Structure) {
  const auto p = catalog_problem("example1");
  EXPECT_EQ(p.n(), 2);
  EXPECT_EQ(p.r(), 1);
  EXPECT_EQ(p.endpoints().m2(), 3);  // x(0) = 0 and x1(1) = f(1)
  EXPECT_FALSE(p.U().contains(Vec::Constant(1, 0.5)));
  EXPECT_TRUE(p.U().contains(Vec::Constant(1, -1.0)));
  Vec x(2);
  x << 0.3, 0.0;
  EXPECT_DOUBLE_EQ(p.dynamics().rhs(0.2, x, Vec::Constant(1, 2.0))(1), 0.2 * 0.2 + 4.0);
}

TEST(Catalog, Example2ValidatesG) {
  const auto s = ExprScope::dynamics(2, 1);
  EXPECT_THROW(catalog_example2(parse_expr("1 + u1", s), 0.5), ModelError);
  EXPECT_THROW(catalog_example2(parse_expr("x1 * u1", s), 0.5), ModelError);
  EXPECT_THROW(catalog_example2(parse_expr("u1", s), -0.5), ModelError);
  const auto p = catalog_example2(parse_expr("3*u1", s), 0.5);
  EXPECT_FALSE(p.x0().has_value());
  EXPECT_EQ(p.endpoints().m2(), 2);
  Vec x(2);
  x << 2.0, 0.0;
  EXPECT_DOUBLE_EQ(p.dynamics().rhs(0, x, Vec::Constant(1, 0.1))(1), 2.0 * 0.3);
}

TEST(Catalog, Example4Velocities) {
  const auto p = catalog_problem("example4");
  const Vec x = Vec::Zero(3);
  EXPECT_DOUBLE_EQ(p.dynamics().rhs(0, x, Vec::Constant(1, -1.0))(1), 7.0);
  EXPECT_DOUBLE_EQ(p.dynamics().rhs(0, x, Vec::Constant(1, 3.0))(1), -45.0);
  EXPECT_NEAR(p.dynamics().rhs(0, x, Vec::Constant(1, 1.0 / 3.0))(1), 1.0 / 3.0, 1e-16);
  EXPECT_EQ(p.U().points().size(), 4u);
}

TEST(Catalog, UnknownName) { EXPECT_THROW(catalog_problem("example9"), ModelError); }
