#pragma once

#include <memory>
#include <string>
#include <vector>

#include "relaxoc/model.hpp"

namespace relaxoc {

/// Continuous piecewise polynomial on [breaks.front(), breaks.back()].
/// Coefficients are monomial in global t: piece i is sum_k c[i][k] t^k.
class PiecewisePolynomial : public TimeFunction {
 public:
  PiecewisePolynomial(std::vector<double> breaks, std::vector<std::vector<double>> coeffs,
                      std::string name = "f", bool require_continuity = true);

  /// "c0 c1 ..." for a single piece on [0,1], or "b1: c0 c1 ...; b2: ..."
  /// where each piece ends at b_i and the first starts at 0.
  static std::shared_ptr<const PiecewisePolynomial> parse(const std::string& text);
  static std::shared_ptr<const PiecewisePolynomial> polynomial(std::vector<double> coeffs);

  double value(double t) const override;
  std::shared_ptr<const TimeFunction> derivative() const override;
  std::string name() const override { return name_; }

  std::size_t pieces() const { return coeffs_.size(); }
  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<std::vector<double>>& coeffs() const { return coeffs_; }
  int degree() const;
  /// Slope of piece i is identically +1 or -1.
  bool unit_slope_piece(std::size_t i) const;

 private:
  std::size_t piece_of(double t) const;
  std::vector<double> breaks_;
  std::vector<std::vector<double>> coeffs_;
  std::string name_;
};

using FSpec = std::shared_ptr<const PiecewisePolynomial>;

/// Hypothesis check for the first catalog problem: f(0) = 0, |f'| <= 1 on
/// the sample grid, and |f'| = 1 on no set of positive measure.
/// Throws ModelError on violation.
void validate_fspec(const PiecewisePolynomial& f, int samples_per_piece = 1001);

/// x2(1) -> inf, x1' = u, x2' = (x1 - f(t))^2 + u^2, U = (-inf,-1] U [1,inf),
/// x(0) = 0, x1(1) = f(1).
ControlProblem catalog_example1(const FSpec& f);
/// x2(1) - x2(0) -> inf, x1' = u, x2' = x1 g(u), x1(0) = x1(1) = 0,
/// U = [-eps, eps]. g is an expression in u1 with g(0) = 0.
ControlProblem catalog_example2(const Expr& g, double eps);
/// x' = u, u in R, x(0) = 0, x(1) = 1.
ControlProblem catalog_example3();
/// x1(1)^2 -> inf, x1' = u, x2' = 4u^2 - 3u^3, x3' = (x1 - x2)^2,
/// x(0) = 0, x3(1) = 0, U = {-1, 1/3, 1, 3}.
ControlProblem catalog_example4();

struct CatalogOptions {
  std::string fspec = "0 0.5";
  std::string gspec = "3*u1";
  double eps = 0.5;
};

/// Dispatch by name: example1 .. example4.
ControlProblem catalog_problem(const std::string& name, const CatalogOptions& opts = {});

}  // namespace relaxoc
