#pragma once

// Small expression language for potentials and gauge functions.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          (right associative)
//   primary := number | 'x' | 'y' | 't' | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | tanh | sqrt
//
// Unary minus binds looser than '^', so -2^2 == -4 and 2^3^2 == 512.

#include <array>
#include <charconv>
#include <cmath>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pilotwave/core/errors.hpp"

namespace pilotwave::expr {

enum class Var : unsigned char { X, Y, T };
enum class Func : unsigned char { Sin, Cos, Exp, Tanh, Sqrt };
enum class Op : unsigned char { Num, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };

/// Syntax error with the byte offset where parsing stopped.
class ParseError : public ConfigError {
 public:
  ParseError(std::size_t offset, std::set<std::string> expected, const std::string& detail)
      : ConfigError(format(offset, expected, detail)), offset_(offset), expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::set<std::string>& expected() const noexcept { return expected_; }

 private:
  static std::string format(std::size_t offset, const std::set<std::string>& expected,
                            const std::string& detail) {
    std::string s = "parse error at offset " + std::to_string(offset) + ": " + detail;
    if (!expected.empty()) {
      s += " (expected";
      for (const auto& e : expected) s += " \"" + e + "\"";
      s += ")";
    }
    return s;
  }

  std::size_t offset_;
  std::set<std::string> expected_;
};

/// Domain error during evaluation (sqrt of a negative, division by zero, ...).
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Num;
  double value = 0.0;
  Var var = Var::X;
  Func func = Func::Sin;
  NodePtr a;
  NodePtr b;
};

namespace detail {

inline NodePtr make_num(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Num;
  n->value = v;
  return n;
}

inline NodePtr make_var(Var v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Variable;
  n->var = v;
  return n;
}

inline NodePtr make_raw(Op op, NodePtr a, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline NodePtr make_call(Func f, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->op = Op::Call;
  n->func = f;
  n->a = std::move(a);
  return n;
}

inline bool is_num(const NodePtr& n, double v) { return n->op == Op::Num && n->value == v; }
inline bool is_num(const NodePtr& n) { return n->op == Op::Num; }

inline double apply_func(Func f, double x) {
  switch (f) {
    case Func::Sin: return std::sin(x);
    case Func::Cos: return std::cos(x);
    case Func::Exp: return std::exp(x);
    case Func::Tanh: return std::tanh(x);
    case Func::Sqrt:
      if (x < 0.0) throw EvalError("sqrt of negative value " + std::to_string(x));
      return std::sqrt(x);
  }
  return 0.0;
}

inline double apply_binary(Op op, double l, double r) {
  switch (op) {
    case Op::Add: return l + r;
    case Op::Sub: return l - r;
    case Op::Mul: return l * r;
    case Op::Div:
      if (r == 0.0) throw EvalError("division by zero");
      return l / r;
    case Op::Pow:
      if (l < 0.0 && std::floor(r) != r) throw EvalError("negative base with non-integer exponent");
      if (l == 0.0 && r < 0.0) throw EvalError("zero raised to a negative power");
      return std::pow(l, r);
    default: return 0.0;
  }
}

// Smart constructors fold constants and drop neutral elements.
inline NodePtr neg(NodePtr a) {
  if (is_num(a)) return make_num(-a->value);
  if (a->op == Op::Neg) return a->a;
  return make_raw(Op::Neg, std::move(a));
}

inline NodePtr fold_or(Op op, NodePtr a, NodePtr b) {
  if (is_num(a) && is_num(b)) {
    try {
      const double v = apply_binary(op, a->value, b->value);
      if (std::isfinite(v)) return make_num(v);
    } catch (const EvalError&) {
    }
  }
  return make_raw(op, std::move(a), std::move(b));
}

inline NodePtr add(NodePtr a, NodePtr b) {
  if (is_num(a, 0.0)) return b;
  if (is_num(b, 0.0)) return a;
  return fold_or(Op::Add, std::move(a), std::move(b));
}

inline NodePtr sub(NodePtr a, NodePtr b) {
  if (is_num(b, 0.0)) return a;
  if (is_num(a, 0.0)) return neg(std::move(b));
  return fold_or(Op::Sub, std::move(a), std::move(b));
}

inline NodePtr mul(NodePtr a, NodePtr b) {
  if (is_num(a, 0.0) || is_num(b, 0.0)) return make_num(0.0);
  if (is_num(a, 1.0)) return b;
  if (is_num(b, 1.0)) return a;
  if (is_num(a, -1.0)) return neg(std::move(b));
  if (is_num(b, -1.0)) return neg(std::move(a));
  return fold_or(Op::Mul, std::move(a), std::move(b));
}

inline NodePtr div(NodePtr a, NodePtr b) {
  if (is_num(a, 0.0) && !is_num(b, 0.0)) return make_num(0.0);
  if (is_num(b, 1.0)) return a;
  return fold_or(Op::Div, std::move(a), std::move(b));
}

inline NodePtr pow(NodePtr a, NodePtr b) {
  if (is_num(b, 1.0)) return a;
  if (is_num(b, 0.0)) return make_num(1.0);
  return fold_or(Op::Pow, std::move(a), std::move(b));
}

inline NodePtr call(Func f, NodePtr a) {
  if (is_num(a)) {
    try {
      const double v = apply_func(f, a->value);
      if (std::isfinite(v)) return make_num(v);
    } catch (const EvalError&) {
    }
  }
  return make_call(f, std::move(a));
}

inline bool depends_on(const NodePtr& n, Var v) {
  switch (n->op) {
    case Op::Num: return false;
    case Op::Variable: return n->var == v;
    case Op::Neg:
    case Op::Call: return depends_on(n->a, v);
    default: return depends_on(n->a, v) || depends_on(n->b, v);
  }
}

inline NodePtr derivative(const NodePtr& n, Var v) {
  if (!depends_on(n, v)) return make_num(0.0);
  switch (n->op) {
    case Op::Num: return make_num(0.0);
    case Op::Variable: return make_num(1.0);
    case Op::Neg: return neg(derivative(n->a, v));
    case Op::Add: return add(derivative(n->a, v), derivative(n->b, v));
    case Op::Sub: return sub(derivative(n->a, v), derivative(n->b, v));
    case Op::Mul:
      return add(mul(derivative(n->a, v), n->b), mul(n->a, derivative(n->b, v)));
    case Op::Div:
      return div(sub(mul(derivative(n->a, v), n->b), mul(n->a, derivative(n->b, v))),
                 pow(n->b, make_num(2.0)));
    case Op::Pow: {
      if (!depends_on(n->b, v)) {
        return mul(mul(n->b, pow(n->a, sub(n->b, make_num(1.0)))), derivative(n->a, v));
      }
      if (is_num(n->a) && n->a->value > 0.0) {
        return mul(mul(n, make_num(std::log(n->a->value))), derivative(n->b, v));
      }
      throw UnsupportedError("derivative of a power with variable base and exponent");
    }
    case Op::Call: {
      const NodePtr& u = n->a;
      const NodePtr du = derivative(u, v);
      switch (n->func) {
        case Func::Sin: return mul(call(Func::Cos, u), du);
        case Func::Cos: return mul(neg(call(Func::Sin, u)), du);
        case Func::Exp: return mul(n, du);
        case Func::Tanh: return mul(sub(make_num(1.0), pow(n, make_num(2.0))), du);
        case Func::Sqrt: return div(du, mul(make_num(2.0), n));
      }
    }
  }
  return make_num(0.0);
}

inline const char* func_name(Func f) {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Exp: return "exp";
    case Func::Tanh: return "tanh";
    case Func::Sqrt: return "sqrt";
  }
  return "?";
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// Binding strength used by the printer: higher binds tighter.
inline int precedence(const NodePtr& n) {
  switch (n->op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Num: return n->value < 0.0 || std::signbit(n->value) ? 3 : 5;
    default: return 5;
  }
}

inline void print(const NodePtr& n, std::string& out);

inline void print_min(const NodePtr& n, int min_prec, std::string& out) {
  if (precedence(n) < min_prec) {
    out += '(';
    print(n, out);
    out += ')';
  } else {
    print(n, out);
  }
}

inline void print(const NodePtr& n, std::string& out) {
  switch (n->op) {
    case Op::Num: out += format_number(n->value); return;
    case Op::Variable: out += n->var == Var::X ? 'x' : n->var == Var::Y ? 'y' : 't'; return;
    case Op::Neg:
      out += '-';
      print_min(n->a, 3, out);
      return;
    case Op::Add:
    case Op::Sub:
      print_min(n->a, 1, out);
      out += n->op == Op::Add ? " + " : " - ";
      print_min(n->b, 2, out);
      return;
    case Op::Mul:
    case Op::Div:
      print_min(n->a, 2, out);
      out += n->op == Op::Mul ? "*" : "/";
      print_min(n->b, 3, out);
      return;
    case Op::Pow:
      print_min(n->a, 5, out);
      out += '^';
      print_min(n->b, 3, out);
      return;
    case Op::Call:
      out += func_name(n->func);
      out += '(';
      print(n->a, out);
      out += ')';
      return;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    NodePtr root = parse_expr();
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError(pos_, {"+", "-", "*", "/", "^", "end of input"}, "unexpected trailing input");
    return root;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                  src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      throw ParseError(pos_, {std::string(1, c)},
                       pos_ < src_.size() ? "unexpected character" : "unexpected end of input");
    }
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_raw(Op::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make_raw(Op::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_raw(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_raw(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make_raw(Op::Neg, parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return make_raw(Op::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ParseError(pos_, {"number", "variable", "function", "("}, "unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      expect(')');
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') return parse_identifier();
    throw ParseError(pos_, {"number", "variable", "function", "("}, "unexpected character");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t nd = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      nd += digits();
    }
    if (nd == 0) throw ParseError(start, {"digit"}, "malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) throw ParseError(pos_, {"digit"}, "malformed exponent");
      (void)save;
    }
    double v = 0.0;
    const auto* first = src_.data() + start;
    const auto* last = src_.data() + pos_;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw ParseError(start, {"number"}, "malformed number");
    return make_num(v);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && ((src_[pos_] >= 'a' && src_[pos_] <= 'z') ||
                                  (src_[pos_] >= 'A' && src_[pos_] <= 'Z') ||
                                  (src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '_'))
      ++pos_;
    const std::string_view id = src_.substr(start, pos_ - start);
    if (id == "x") return make_var(Var::X);
    if (id == "y") return make_var(Var::Y);
    if (id == "t") return make_var(Var::T);
    static constexpr std::array<std::pair<std::string_view, Func>, 5> funcs{{{"sin", Func::Sin},
                                                                            {"cos", Func::Cos},
                                                                            {"exp", Func::Exp},
                                                                            {"tanh", Func::Tanh},
                                                                            {"sqrt", Func::Sqrt}}};
    for (const auto& [name, f] : funcs) {
      if (id == name) {
        expect('(');
        NodePtr arg = parse_expr();
        expect(')');
        return make_call(f, arg);
      }
    }
    throw ParseError(start, {"x", "y", "t", "sin", "cos", "exp", "tanh", "sqrt"},
                     "unknown identifier '" + std::string(id) + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

struct Instr {
  Op op;
  double value = 0.0;
  Var var = Var::X;
  Func func = Func::Sin;
};

inline void compile(const NodePtr& n, std::vector<Instr>& prog, int& depth, int& max_depth) {
  switch (n->op) {
    case Op::Num:
    case Op::Variable:
      prog.push_back({n->op, n->value, n->var, n->func});
      max_depth = std::max(max_depth, ++depth);
      return;
    case Op::Neg:
    case Op::Call:
      compile(n->a, prog, depth, max_depth);
      prog.push_back({n->op, 0.0, Var::X, n->func});
      return;
    default:
      compile(n->a, prog, depth, max_depth);
      compile(n->b, prog, depth, max_depth);
      prog.push_back({n->op});
      --depth;
      return;
  }
}

}  // namespace detail

/// Parsed, immutable expression in x, y and t. Cheap to copy.
class Expression {
 public:
  Expression() : Expression(detail::make_num(0.0)) {}
  explicit Expression(NodePtr root) : root_(std::move(root)) { build(); }

  static Expression parse(std::string_view src) { return Expression(detail::Parser(src).parse()); }
  static Expression constant(double v) { return Expression(detail::make_num(v)); }
  static Expression variable(Var v) { return Expression(detail::make_var(v)); }

  double operator()(double x, double y = 0.0, double t = 0.0) const {
    if (program_.size() == 1 && program_[0].op == Op::Num) return program_[0].value;
    double stack_small[32];
    std::vector<double> stack_big;
    double* st = stack_small;
    if (max_depth_ > 32) {
      stack_big.resize(static_cast<std::size_t>(max_depth_));
      st = stack_big.data();
    }
    int sp = 0;
    for (const auto& in : program_) {
      switch (in.op) {
        case Op::Num: st[sp++] = in.value; break;
        case Op::Variable: st[sp++] = in.var == Var::X ? x : in.var == Var::Y ? y : t; break;
        case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
        case Op::Call: st[sp - 1] = detail::apply_func(in.func, st[sp - 1]); break;
        default:
          --sp;
          st[sp - 1] = detail::apply_binary(in.op, st[sp - 1], st[sp]);
          break;
      }
    }
    return st[0];
  }

  Expression derivative(Var v) const { return Expression(detail::derivative(root_, v)); }
  bool depends_on(Var v) const { return detail::depends_on(root_, v); }
  bool is_constant() const { return root_->op == Op::Num; }
  bool is_zero() const { return detail::is_num(root_, 0.0); }
  double constant_value() const { return root_->value; }

  /// Canonical text; parsing it back and printing again yields the same text.
  std::string to_string() const {
    std::string s;
    detail::print(root_, s);
    return s;
  }

  const NodePtr& root() const { return root_; }

  friend Expression operator+(const Expression& a, const Expression& b) {
    return Expression(detail::add(a.root_, b.root_));
  }
  friend Expression operator-(const Expression& a, const Expression& b) {
    return Expression(detail::sub(a.root_, b.root_));
  }
  friend Expression operator*(const Expression& a, const Expression& b) {
    return Expression(detail::mul(a.root_, b.root_));
  }
  friend Expression operator/(const Expression& a, const Expression& b) {
    return Expression(detail::div(a.root_, b.root_));
  }
  friend Expression operator-(const Expression& a) { return Expression(detail::neg(a.root_)); }
  friend Expression operator*(double k, const Expression& a) { return constant(k) * a; }

 private:
  void build() {
    program_.clear();
    int depth = 0;
    max_depth_ = 0;
    detail::compile(root_, program_, depth, max_depth_);
  }

  NodePtr root_;
  std::vector<detail::Instr> program_;
  int max_depth_ = 0;
};

inline Expression parse_expression(std::string_view src) { return Expression::parse(src); }

}  // namespace pilotwave::expr
