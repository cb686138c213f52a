#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace relaxoc {

/// Which variable family an identifier refers to.
///
/// Dynamics expressions see `t`, `x<i>`, `u<j>`. Endpoint expressions see
/// `y<i>` (the state at t0) and `z<i>` (the state at t1).
enum class VarKind { Time, State, Control, Initial, Terminal };

struct Variable {
  VarKind kind = VarKind::Time;
  int index = 0;  // 0-based; ignored for Time

  friend bool operator==(const Variable&, const Variable&) = default;
};

/// Identifier universe accepted by the parser.
struct ExprScope {
  int n = 0;  // state dimension
  int r = 0;  // control dimension
  bool endpoint = false;

  static ExprScope dynamics(int n, int r) { return {n, r, false}; }
  static ExprScope endpoints(int n) { return {n, 0, true}; }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Raised when evaluation leaves the domain (sqrt of a negative, division by
/// zero). Carries the printed offending subexpression.
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, std::string subexpression)
      : std::runtime_error(what + ": " + subexpression),
        subexpression_(std::move(subexpression)) {}
  const std::string& subexpression() const { return subexpression_; }

 private:
  std::string subexpression_;
};

/// A univariate function of time that cannot be written in the grammar
/// (e.g. a piecewise polynomial). Embedded in expressions as `name(t)`.
class TimeFunction {
 public:
  virtual ~TimeFunction() = default;
  virtual double value(double t) const = 0;
  virtual std::shared_ptr<const TimeFunction> derivative() const = 0;
  virtual std::string name() const = 0;
};

/// Point at which an expression is evaluated. Unused families may be empty.
struct EvalPoint {
  double t = 0.0;
  std::span<const double> x{};
  std::span<const double> u{};
  std::span<const double> y{};
  std::span<const double> z{};
};

/// Set during evaluation when a kink of abs() was hit and the subgradient 0
/// was used.
struct EvalFlags {
  bool abs_kink = false;
};

/// Immutable expression tree. Copies share nodes.
class Expr {
 public:
  enum class Op {
    Const, Var, Neg, Add, Sub, Mul, Div, Pow,
    Sin, Cos, Exp, Sqrt, Abs, Sign, TimeFn
  };
  struct Node;

  Expr();  // the constant 0
  static Expr constant(double value);
  static Expr variable(Variable v);
  static Expr time_function(std::shared_ptr<const TimeFunction> fn);
  static Expr unary(Op op, Expr arg);
  static Expr binary(Op op, Expr lhs, Expr rhs);
  static Expr power(Expr base, int exponent);

  Op op() const;
  double value() const;        // Const only
  Variable variable() const;   // Var only
  int exponent() const;        // Pow only
  std::shared_ptr<const TimeFunction> time_fn() const;  // TimeFn only
  const Expr& arg(std::size_t i) const;
  std::size_t arity() const;
  bool is_constant() const { return op() == Op::Const; }
  bool is_zero() const { return is_constant() && value() == 0.0; }

  double eval(const EvalPoint& at, EvalFlags* flags = nullptr) const;

  /// Fully parenthesized text that parses back to a structurally equal tree.
  std::string str() const;

  bool references(VarKind kind) const;
  /// Largest 1-based index used within a variable family (0 if unused).
  int max_index(VarKind kind) const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  friend struct ExprBuilder;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

/// Parses the documented infix grammar (see docs/expressions.md).
Expr parse_expr(std::string_view source, const ExprScope& scope);

/// Rebuilds e with every variable v replaced by map(v) when it returns a
/// value. Constants are folded on the way up.
Expr substitute(const Expr& e, const std::function<std::optional<Expr>(Variable)>& map);

/// Forward-mode symbolic derivative with constant folding.
/// abs'(0) evaluates to the subgradient 0 and raises EvalFlags::abs_kink.
Expr differentiate(const Expr& e, Variable wrt);

inline double eval_expr(const Expr& e, double t, std::span<const double> x,
                        std::span<const double> u) {
  return e.eval(EvalPoint{t, x, u, {}, {}});
}

}  // namespace relaxoc
