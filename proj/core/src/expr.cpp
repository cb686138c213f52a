#include "relaxoc/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace relaxoc {

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;
  Variable var{};
  int exponent = 0;
  std::vector<Expr> args;
  std::shared_ptr<const TimeFunction> fn;
};

namespace {

using Op = Expr::Op;

bool is_function_op(Op op) {
  switch (op) {
    case Op::Sin: case Op::Cos: case Op::Exp:
    case Op::Sqrt: case Op::Abs: case Op::Sign:
      return true;
    default:
      return false;
  }
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Sign: return "sign";
    default: return "?";
  }
}

const char* binary_symbol(Op op) {
  switch (op) {
    case Op::Add: return " + ";
    case Op::Sub: return " - ";
    case Op::Mul: return " * ";
    case Op::Div: return " / ";
    default: return " ? ";
  }
}

// Shortest %.*g rendering that reads back to the same double.
std::string format_number(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

double sign_of(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

double apply_function(Op op, double a, const Expr& self, EvalFlags* flags) {
  switch (op) {
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return std::exp(a);
    case Op::Sqrt:
      if (a < 0.0) throw DomainError("sqrt of negative value", self.str());
      return std::sqrt(a);
    case Op::Abs: return std::fabs(a);
    case Op::Sign:
      if (a == 0.0 && flags) flags->abs_kink = true;
      return sign_of(a);
    default:
      throw std::logic_error("not a function op");
  }
}

double integer_power(double base, int k, const Expr& self) {
  if (k < 0 && base == 0.0)
    throw DomainError("division by zero in negative power", self.str());
  return std::pow(base, k);
}

}  // namespace

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(Variable v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = v;
  return Expr(std::move(n));
}

Expr Expr::time_function(std::shared_ptr<const TimeFunction> fn) {
  auto n = std::make_shared<Node>();
  n->op = Op::TimeFn;
  n->fn = std::move(fn);
  return Expr(std::move(n));
}

// Raw (unfolded) construction is needed by the parser so that the tree
// mirrors the source text. It lives here to reach the private constructor.
struct ExprBuilder {
  static Expr raw(Op op, std::vector<Expr> args, int exponent = 0) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->args = std::move(args);
    n->exponent = exponent;
    return Expr(std::move(n));
  }
  static const std::shared_ptr<const TimeFunction>& fn(const Expr& e) { return e.node_->fn; }
};

Expr Expr::unary(Op op, Expr arg) {
  if (op == Op::Neg) {
    if (arg.is_constant()) return constant(-arg.value());
    if (arg.op() == Op::Neg) return arg.arg(0);
  } else if (is_function_op(op) && arg.is_constant()) {
    double a = arg.value();
    bool defined = !(op == Op::Sqrt && a < 0.0);
    if (defined) return constant(apply_function(op, a, arg, nullptr));
  }
  return ExprBuilder::raw(op, {std::move(arg)});
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  const bool lc = lhs.is_constant(), rc = rhs.is_constant();
  switch (op) {
    case Op::Add:
      if (lc && rc) return constant(lhs.value() + rhs.value());
      if (lhs.is_zero()) return rhs;
      if (rhs.is_zero()) return lhs;
      break;
    case Op::Sub:
      if (lc && rc) return constant(lhs.value() - rhs.value());
      if (rhs.is_zero()) return lhs;
      if (lhs.is_zero()) return unary(Op::Neg, std::move(rhs));
      break;
    case Op::Mul:
      if (lc && rc) return constant(lhs.value() * rhs.value());
      if (lhs.is_zero() || rhs.is_zero()) return constant(0.0);
      if (lc && lhs.value() == 1.0) return rhs;
      if (rc && rhs.value() == 1.0) return lhs;
      break;
    case Op::Div:
      if (lc && rc && rhs.value() != 0.0) return constant(lhs.value() / rhs.value());
      if (rc && rhs.value() == 1.0) return lhs;
      if (lhs.is_zero() && !(rc && rhs.value() == 0.0)) return constant(0.0);
      break;
    default:
      throw std::logic_error("Expr::binary: not a binary op");
  }
  return ExprBuilder::raw(op, {std::move(lhs), std::move(rhs)});
}

Expr Expr::power(Expr base, int exponent) {
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant() && !(exponent < 0 && base.value() == 0.0))
    return constant(std::pow(base.value(), exponent));
  return ExprBuilder::raw(Op::Pow, {std::move(base)}, exponent);
}

Expr::Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
Variable Expr::variable() const { return node_->var; }
int Expr::exponent() const { return node_->exponent; }
std::shared_ptr<const TimeFunction> Expr::time_fn() const { return node_->fn; }
const Expr& Expr::arg(std::size_t i) const { return node_->args.at(i); }
std::size_t Expr::arity() const { return node_->args.size(); }

double Expr::eval(const EvalPoint& at, EvalFlags* flags) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var: {
      const int i = n.var.index;
      switch (n.var.kind) {
        case VarKind::Time: return at.t;
        case VarKind::State: return at.x[static_cast<std::size_t>(i)];
        case VarKind::Control: return at.u[static_cast<std::size_t>(i)];
        case VarKind::Initial: return at.y[static_cast<std::size_t>(i)];
        case VarKind::Terminal: return at.z[static_cast<std::size_t>(i)];
      }
      return 0.0;
    }
    case Op::Neg:
      return -n.args[0].eval(at, flags);
    case Op::Add:
      return n.args[0].eval(at, flags) + n.args[1].eval(at, flags);
    case Op::Sub:
      return n.args[0].eval(at, flags) - n.args[1].eval(at, flags);
    case Op::Mul:
      return n.args[0].eval(at, flags) * n.args[1].eval(at, flags);
    case Op::Div: {
      const double num = n.args[0].eval(at, flags);
      const double den = n.args[1].eval(at, flags);
      if (den == 0.0) throw DomainError("division by zero", str());
      return num / den;
    }
    case Op::Pow:
      return integer_power(n.args[0].eval(at, flags), n.exponent, *this);
    case Op::TimeFn:
      return n.fn->value(at.t);
    default:
      return apply_function(n.op, n.args[0].eval(at, flags), *this, flags);
  }
}

std::string Expr::str() const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const:
      if (std::signbit(n.value) && n.value != 0.0)
        return "(-" + format_number(-n.value) + ")";
      return format_number(n.value == 0.0 ? 0.0 : n.value);
    case Op::Var: {
      const int i = n.var.index + 1;
      switch (n.var.kind) {
        case VarKind::Time: return "t";
        case VarKind::State: return "x" + std::to_string(i);
        case VarKind::Control: return "u" + std::to_string(i);
        case VarKind::Initial: return "y" + std::to_string(i);
        case VarKind::Terminal: return "z" + std::to_string(i);
      }
      return "?";
    }
    case Op::Neg:
      return "(-" + n.args[0].str() + ")";
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
      return "(" + n.args[0].str() + binary_symbol(n.op) + n.args[1].str() + ")";
    case Op::Pow: {
      const Expr& b = n.args[0];
      std::string base = b.str();
      if (b.op() == Op::Pow) base = "(" + base + ")";
      return base + "^" + std::to_string(n.exponent);
    }
    case Op::TimeFn:
      return n.fn->name() + "(t)";
    default:
      return std::string(function_name(n.op)) + "(" + n.args[0].str() + ")";
  }
}

bool Expr::references(VarKind kind) const {
  if (node_->op == Op::Var) return node_->var.kind == kind;
  if (node_->op == Op::TimeFn) return kind == VarKind::Time;
  for (const auto& a : node_->args)
    if (a.references(kind)) return true;
  return false;
}

int Expr::max_index(VarKind kind) const {
  int best = 0;
  if (node_->op == Op::Var && node_->var.kind == kind)
    best = node_->var.index + 1;
  for (const auto& a : node_->args) best = std::max(best, a.max_index(kind));
  return best;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.op != y.op || x.args.size() != y.args.size()) return false;
  switch (x.op) {
    case Op::Const: if (x.value != y.value) return false; break;
    case Op::Var: if (!(x.var == y.var)) return false; break;
    case Op::Pow: if (x.exponent != y.exponent) return false; break;
    case Op::TimeFn: if (x.fn != y.fn) return false; break;
    default: break;
  }
  for (std::size_t i = 0; i < x.args.size(); ++i)
    if (!(x.args[i] == y.args[i])) return false;
  return true;
}

Expr substitute(const Expr& e, const std::function<std::optional<Expr>(Variable)>& map) {
  switch (e.op()) {
    case Op::Const:
    case Op::TimeFn:
      return e;
    case Op::Var: {
      auto r = map(e.variable());
      return r ? *r : e;
    }
    case Op::Pow:
      return Expr::power(substitute(e.arg(0), map), e.exponent());
    default:
      break;
  }
  if (e.arity() == 1) return Expr::unary(e.op(), substitute(e.arg(0), map));
  return Expr::binary(e.op(), substitute(e.arg(0), map), substitute(e.arg(1), map));
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(Op::Neg, a); }

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view src, const ExprScope& scope) : src_(src), scope_(scope) {}

  Expr parse() {
    Expr e = expression();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    throw ParseError(msg, at);
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_space();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  Expr expression() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) lhs = ExprBuilder::raw(Op::Add, {lhs, term()});
      else if (accept('-')) lhs = ExprBuilder::raw(Op::Sub, {lhs, term()});
      else return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = ExprBuilder::raw(Op::Mul, {lhs, unary()});
      else if (accept('/')) lhs = ExprBuilder::raw(Op::Div, {lhs, unary()});
      else return lhs;
    }
  }

  Expr unary() {
    if (accept('-')) {
      Expr operand = unary();
      // A negated literal is folded so printed negative constants reparse
      // to the same node.
      if (operand.is_constant()) return Expr::constant(-operand.value());
      return ExprBuilder::raw(Op::Neg, {operand});
    }
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    while (accept('^')) {
      skip_space();
      const std::size_t at = pos_;
      bool negative = false;
      if (accept('-')) negative = true;
      else accept('+');
      skip_space();
      const std::size_t digits_begin = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ == digits_begin) fail_at("exponent must be an integer literal", at);
      if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E'))
        fail_at("exponent must be an integer literal", at);
      int k = 0;
      auto [ptr, ec] = std::from_chars(src_.data() + digits_begin, src_.data() + pos_, k);
      if (ec != std::errc()) fail_at("exponent out of range", at);
      base = ExprBuilder::raw(Op::Pow, {base}, negative ? -k : k);
    }
    return base;
  }

  Expr number() {
    const std::size_t begin = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    const std::string text(src_.substr(begin, pos_ - begin));
    if (text == ".") fail_at("malformed number", begin);
    return Expr::constant(std::strtod(text.c_str(), nullptr));
  }

  Expr primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = expression();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr identifier() {
    const std::size_t begin = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(begin, pos_ - begin));

    static const std::pair<const char*, Op> functions[] = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp},
        {"sqrt", Op::Sqrt}, {"abs", Op::Abs}, {"sign", Op::Sign}};
    for (const auto& [fname, op] : functions) {
      if (name != fname) continue;
      if (!accept('(')) fail_at("expected '(' after function '" + name + "'", pos_);
      Expr a = expression();
      if (peek() == ',') fail("arity mismatch: '" + name + "' takes exactly one argument");
      if (!accept(')')) fail("expected ')'");
      return ExprBuilder::raw(op, {a});
    }

    Expr v = variable(name, begin);
    if (peek() == '(') fail("arity mismatch: '" + name + "' is not a function");
    return v;
  }

  Expr variable(const std::string& name, std::size_t at) {
    if (name == "t") {
      if (scope_.endpoint) fail_at("'t' is not available in endpoint expressions", at);
      return Expr::variable({VarKind::Time, 0});
    }
    if (name.size() >= 2) {
      const char head = name[0];
      const std::string tail = name.substr(1);
      bool digits = !tail.empty() && tail[0] != '0';
      for (char d : tail) digits = digits && std::isdigit(static_cast<unsigned char>(d));
      if (digits) {
        const int idx = std::stoi(tail);
        auto make = [&](VarKind kind, int limit) {
          if (idx > limit)
            fail_at("variable '" + name + "' out of range (dimension " +
                        std::to_string(limit) + ")", at);
          return Expr::variable({kind, idx - 1});
        };
        if (!scope_.endpoint) {
          if (head == 'x') return make(VarKind::State, scope_.n);
          if (head == 'u') return make(VarKind::Control, scope_.r);
        } else {
          if (head == 'y') return make(VarKind::Initial, scope_.n);
          if (head == 'z') return make(VarKind::Terminal, scope_.n);
        }
      }
    }
    fail_at("unknown identifier '" + name + "'", at);
  }

  std::string_view src_;
  ExprScope scope_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view source, const ExprScope& scope) {
  return Parser(source, scope).parse();
}

// ---------------------------------------------------------------------------
// Differentiation

Expr differentiate(const Expr& e, Variable wrt) {
  switch (e.op()) {
    case Op::Const:
      return Expr::constant(0.0);
    case Op::Var: {
      const Variable v = e.variable();
      const bool same = v.kind == wrt.kind && (v.kind == VarKind::Time || v.index == wrt.index);
      return Expr::constant(same ? 1.0 : 0.0);
    }
    case Op::TimeFn: {
      if (wrt.kind != VarKind::Time) return Expr::constant(0.0);
      return Expr::time_function(ExprBuilder::fn(e)->derivative());
    }
    default:
      break;
  }

  const Expr& a = e.arg(0);
  const Expr da = differentiate(a, wrt);
  switch (e.op()) {
    case Op::Neg:
      return -da;
    case Op::Add:
      return da + differentiate(e.arg(1), wrt);
    case Op::Sub:
      return da - differentiate(e.arg(1), wrt);
    case Op::Mul: {
      const Expr& b = e.arg(1);
      return da * b + a * differentiate(b, wrt);
    }
    case Op::Div: {
      const Expr& b = e.arg(1);
      const Expr db = differentiate(b, wrt);
      return da / b - (a * db) / Expr::power(b, 2);
    }
    case Op::Pow: {
      const int k = e.exponent();
      return Expr::constant(k) * Expr::power(a, k - 1) * da;
    }
    case Op::Sin:
      return Expr::unary(Op::Cos, a) * da;
    case Op::Cos:
      return -(Expr::unary(Op::Sin, a) * da);
    case Op::Exp:
      return e * da;
    case Op::Sqrt:
      return da / (Expr::constant(2.0) * e);
    case Op::Abs:
      return Expr::unary(Op::Sign, a) * da;
    case Op::Sign:
      return Expr::constant(0.0);
    default:
      throw std::logic_error("differentiate: unhandled op");
  }
}

}  // namespace relaxoc
