#pragma once

// Arithmetic expression language used to write Lagrangians, constraint
// functions and candidate submanifolds.
//
// Grammar (whitespace-insensitive):
//
//   expr    := term { ('+' | '-') term }
//   term    := unary { ('*' | '/') unary }
//   unary   := '-' unary | power
//   power   := primary [ '^' unary ]
//   primary := number | identifier | function '(' expr ')' | '(' expr ')'
//   function:= 'sin' | 'cos' | 'tan' | 'exp' | 'log' | 'sqrt'
//   identifier := [a-zA-Z][a-zA-Z0-9_]*
//   number  := digits [ '.' digits ] [ ('e'|'E') ['+'|'-'] digits ]
//            | '.' digits [ exponent ]
//
// '^' binds tighter than unary minus, so "-x^2" is -(x^2), and it is
// right-associative. There is no implicit multiplication.

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vaknh/error.hpp"
#include "vaknh/hyperdual.hpp"

namespace vaknh::expr {

enum class UnaryOp { Neg, Sin, Cos, Tan, Exp, Log, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Constant {
  double value;
};
struct Variable {
  std::string name;
};
struct Unary {
  UnaryOp op;
  NodePtr arg;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs;
  NodePtr rhs;
};

struct Node {
  std::variant<Constant, Variable, Unary, Binary> data;
};

/// Immutable expression tree. Copies share structure.
class Expression {
public:
  Expression();  // the constant 0
  explicit Expression(NodePtr root);

  static Expression constant(double value);
  static Expression variable(std::string name);
  static Expression unary(UnaryOp op, const Expression& arg);
  static Expression binary(BinaryOp op, const Expression& lhs, const Expression& rhs);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  std::string to_string() const;

  friend bool operator==(const Expression& a, const Expression& b);

private:
  NodePtr root_;
};

class ParseError : public InputError {
public:
  ParseError(const std::string& message, std::size_t offset, std::size_t line, std::size_t column,
             std::string expected);
  std::size_t offset() const noexcept { return offset_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& expected() const noexcept { return expected_; }

private:
  std::size_t offset_;
  std::size_t line_;
  std::size_t column_;
  std::string expected_;
};

Expression parse(std::string_view source);

/// Text that parses back to a structurally identical tree. Negative
/// constants (which the parser never produces) come back as negations.
std::string serialize(const Expression& e);
std::string serialize(const Node& n);

std::set<std::string> free_vars(const Expression& e);

bool is_identifier(std::string_view s);
bool is_function_name(std::string_view s);

/// Replaces named variables by constants and folds every variable-free
/// subtree into a single constant.
Expression substitute_constants(const Expression& e, const std::map<std::string, double>& values);

// ---------------------------------------------------------------------------
// Evaluation semantics, shared by the tree walker and compiled programs.

namespace detail {

inline constexpr double kMaxIntegerExponent = 1024.0;

inline bool is_integer_exponent(double c) {
  return std::isfinite(c) && std::trunc(c) == c && std::fabs(c) <= kMaxIntegerExponent;
}

template <class T>
T apply_unary(UnaryOp op, const T& a, const Node& origin) {
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  using std::tan;
  switch (op) {
    case UnaryOp::Neg: return -a;
    case UnaryOp::Sin: return sin(a);
    case UnaryOp::Cos: return cos(a);
    case UnaryOp::Tan: return tan(a);
    case UnaryOp::Exp: return exp(a);
    case UnaryOp::Log:
      if (!(value_of(a) > 0.0)) throw DomainError("log of non-positive value", serialize(origin));
      return log(a);
    case UnaryOp::Sqrt:
      if (value_of(a) < 0.0 || std::isnan(value_of(a)))
        throw DomainError("sqrt of negative value", serialize(origin));
      return sqrt(a);
  }
  return a;
}

// Integer powers by left-to-right repeated multiplication.
template <class T>
T integer_power(const T& a, double c, const Node& origin) {
  const long k = static_cast<long>(c);
  if (k == 0) return T(1.0);
  const long n = k < 0 ? -k : k;
  T r = a;
  for (long i = 1; i < n; ++i) r = r * a;
  if (k < 0) {
    if (value_of(r) == 0.0) throw DomainError("division by zero", serialize(origin));
    return T(1.0) / r;
  }
  return r;
}

template <class T>
T constant_power(const T& a, double c, const Node& origin) {
  if (is_integer_exponent(c)) return integer_power(a, c, origin);
  if (!(value_of(a) > 0.0))
    throw DomainError("non-integer power of non-positive base", serialize(origin));
  return pow_real(a, c);
}

template <class T>
T apply_binary(BinaryOp op, const T& a, const T& b, const Node& origin) {
  using std::exp;
  using std::log;
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div:
      if (value_of(b) == 0.0) throw DomainError("division by zero", serialize(origin));
      return a / b;
    case BinaryOp::Pow:
      // variable exponent
      if (!(value_of(a) > 0.0))
        throw DomainError("non-integer power of non-positive base", serialize(origin));
      return exp(b * log(a));
  }
  return a;
}

bool has_variables(const Node& n);

// An exponent without variables is reduced to a number before the power is
// taken, so "x^-2" and "2^3^2" use the integer rule.
inline std::optional<double> constant_exponent(const Node& rhs);

template <class T, class Lookup>
T walk(const Node& n, const Lookup& lookup) {
  return std::visit(
      [&](const auto& d) -> T {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Constant>) {
          return T(d.value);
        } else if constexpr (std::is_same_v<D, Variable>) {
          return lookup(d.name);
        } else if constexpr (std::is_same_v<D, Unary>) {
          return apply_unary<T>(d.op, walk<T>(*d.arg, lookup), n);
        } else {
          T lhs = walk<T>(*d.lhs, lookup);
          if (d.op == BinaryOp::Pow) {
            if (const auto c = constant_exponent(*d.rhs)) return constant_power<T>(lhs, *c, n);
          }
          T rhs = walk<T>(*d.rhs, lookup);
          return apply_binary<T>(d.op, lhs, rhs, n);
        }
      },
      n.data);
}

inline std::optional<double> constant_exponent(const Node& rhs) {
  if (const auto* c = std::get_if<Constant>(&rhs.data)) return c->value;
  if (has_variables(rhs)) return std::nullopt;
  return walk<double>(rhs, [](const std::string&) -> double { return 0.0; });
}

}  // namespace detail

/// Evaluates `e` with every free variable looked up in `env`.
/// Throws UnboundVariableError or DomainError.
template <class T>
T evaluate(const Expression& e, const std::map<std::string, T>& env) {
  return detail::walk<T>(e.root(), [&](const std::string& name) -> T {
    auto it = env.find(name);
    if (it == env.end()) throw UnboundVariableError(name);
    return it->second;
  });
}

/// An expression bound to a fixed slot layout and flattened to postfix
/// code, for repeated evaluation inside the dynamics.
class Program {
public:
  Program() = default;

  /// Binds every free variable of `e` to its index in `slots`; names found
  /// in `constants` are substituted first. Throws UnboundVariableError for
  /// names in neither.
  static Program compile(const Expression& e, std::span<const std::string> slots,
                         const std::map<std::string, double>& constants = {});

  template <class T>
  T run(std::span<const T> slots) const;

  const Expression& source() const { return source_; }

private:
  enum class Kind { Const, Slot, Unary, Binary, PowConst };
  struct Instr {
    Kind kind;
    int code;       // UnaryOp / BinaryOp, or slot index
    double value;   // constant or exponent
    const Node* origin;
  };

  void emit(const Node& n, std::span<const std::string> slots);

  Expression source_;
  std::vector<Instr> code_;
  std::size_t depth_ = 0;
};

template <class T>
T Program::run(std::span<const T> slots) const {
  std::vector<T> stack;
  stack.reserve(depth_);
  for (const Instr& in : code_) {
    switch (in.kind) {
      case Kind::Const: stack.emplace_back(in.value); break;
      case Kind::Slot: stack.push_back(slots[static_cast<std::size_t>(in.code)]); break;
      case Kind::Unary:
        stack.back() = detail::apply_unary<T>(static_cast<UnaryOp>(in.code), stack.back(), *in.origin);
        break;
      case Kind::PowConst:
        stack.back() = detail::constant_power<T>(stack.back(), in.value, *in.origin);
        break;
      case Kind::Binary: {
        T rhs = std::move(stack.back());
        stack.pop_back();
        stack.back() = detail::apply_binary<T>(static_cast<BinaryOp>(in.code), stack.back(), rhs, *in.origin);
        break;
      }
    }
  }
  return stack.back();
}

}  // namespace vaknh::expr
