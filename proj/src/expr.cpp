#include "vaknh/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <sstream>

namespace vaknh::expr {

namespace {

constexpr std::array<std::pair<std::string_view, UnaryOp>, 6> kFunctions{{
    {"sin", UnaryOp::Sin},
    {"cos", UnaryOp::Cos},
    {"tan", UnaryOp::Tan},
    {"exp", UnaryOp::Exp},
    {"log", UnaryOp::Log},
    {"sqrt", UnaryOp::Sqrt},
}};

std::string_view function_name(UnaryOp op) {
  for (const auto& [name, f] : kFunctions)
    if (f == op) return name;
  return "neg";
}

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Number:
    case Tok::Ident: return "'" + std::string(t.text) + "'";
    default: return "'" + std::string(t.text) + "'";
  }
}

class Parser {
public:
  explicit Parser(std::string_view src) : src_(src) { advance(); }

  Expression parse_all() {
    NodePtr e = parse_expr();
    if (tok_.kind != Tok::End) fail("operator or end of input");
    return Expression(e);
  }

private:
  [[noreturn]] void fail(const std::string& expected) const { fail_at(tok_.offset, expected, describe(tok_)); }

  [[noreturn]] void fail_at(std::size_t offset, const std::string& expected, const std::string& found) const {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < offset && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream msg;
    msg << "syntax error at line " << line << ", column " << column << " (byte " << offset
        << "): expected " << expected << ", found " << found;
    throw ParseError(msg.str(), offset, line, column, expected);
  }

  void advance() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
    const std::size_t start = pos_;
    if (pos_ >= src_.size()) {
      tok_ = {Tok::End, start, {}};
      return;
    }
    const char c = src_[pos_];
    auto single = [&](Tok k) {
      ++pos_;
      tok_ = {k, start, src_.substr(start, 1)};
    };
    switch (c) {
      case '+': return single(Tok::Plus);
      case '-': return single(Tok::Minus);
      case '*': return single(Tok::Star);
      case '/': return single(Tok::Slash);
      case '^': return single(Tok::Caret);
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      default: break;
    }
    auto is_digit = [](char ch) { return ch >= '0' && ch <= '9'; };
    if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
      std::size_t p = pos_;
      while (p < src_.size() && is_digit(src_[p])) ++p;
      if (p < src_.size() && src_[p] == '.') {
        ++p;
        while (p < src_.size() && is_digit(src_[p])) ++p;
      }
      if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
        std::size_t q = p + 1;
        if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
        if (q < src_.size() && is_digit(src_[q])) {
          while (q < src_.size() && is_digit(src_[q])) ++q;
          p = q;
        }
      }
      const std::string_view text = src_.substr(start, p - start);
      double value = 0.0;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        fail_at(start, "number", "'" + std::string(text) + "'");
      pos_ = p;
      tok_ = {Tok::Number, start, text, value};
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) && static_cast<unsigned char>(c) < 128) {
      std::size_t p = pos_ + 1;
      while (p < src_.size()) {
        const auto ch = static_cast<unsigned char>(src_[p]);
        if (ch < 128 && (std::isalnum(ch) || ch == '_'))
          ++p;
        else
          break;
      }
      pos_ = p;
      tok_ = {Tok::Ident, start, src_.substr(start, p - start)};
      return;
    }
    fail_at(start, "number, identifier, '-' or '('", "character '" + std::string(1, c) + "'");
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
      const BinaryOp op = tok_.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      advance();
      NodePtr rhs = parse_term();
      lhs = make({Binary{op, lhs, rhs}});
    }
    return lhs;
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
      const BinaryOp op = tok_.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      advance();
      NodePtr rhs = parse_unary();
      lhs = make({Binary{op, lhs, rhs}});
    }
    return lhs;
  }

  NodePtr parse_unary() {
    if (tok_.kind == Tok::Minus) {
      advance();
      return make({Unary{UnaryOp::Neg, parse_unary()}});
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (tok_.kind == Tok::Caret) {
      advance();
      NodePtr exponent = parse_unary();
      return make({Binary{BinaryOp::Pow, base, exponent}});
    }
    return base;
  }

  NodePtr parse_primary() {
    switch (tok_.kind) {
      case Tok::Number: {
        const double v = tok_.number;
        advance();
        return make({Constant{v}});
      }
      case Tok::Ident: {
        const Token id = tok_;
        advance();
        const bool is_fn = is_function_name(id.text);
        if (tok_.kind != Tok::LParen) {
          if (is_fn) fail("'(' after function name '" + std::string(id.text) + "'");
          return make({Variable{std::string(id.text)}});
        }
        const auto it = std::find_if(kFunctions.begin(), kFunctions.end(),
                                     [&](const auto& f) { return f.first == id.text; });
        if (it == kFunctions.end())
          fail_at(id.offset, "one of sin, cos, tan, exp, log, sqrt",
                  "unknown function '" + std::string(id.text) + "'");
        advance();
        NodePtr arg = parse_expr();
        expect_rparen();
        return make({Unary{it->second, arg}});
      }
      case Tok::LParen: {
        advance();
        NodePtr inner = parse_expr();
        expect_rparen();
        return inner;
      }
      default: fail("number, identifier, '-' or '('");
    }
  }

  void expect_rparen() {
    if (tok_.kind != Tok::RParen) fail("')'");
    advance();
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_{Tok::End, 0, {}};
};

// ---------------------------------------------------------------------------
// Serializer

// Binding strength of the outermost construct of a node.
int level(const Node& n) {
  if (const auto* c = std::get_if<Constant>(&n.data)) return c->value < 0.0 || std::signbit(c->value) ? 3 : 5;
  if (std::holds_alternative<Variable>(n.data)) return 5;
  if (const auto* u = std::get_if<Unary>(&n.data)) return u->op == UnaryOp::Neg ? 3 : 5;
  const auto& b = std::get<Binary>(n.data);
  switch (b.op) {
    case BinaryOp::Add:
    case BinaryOp::Sub: return 1;
    case BinaryOp::Mul:
    case BinaryOp::Div: return 2;
    case BinaryOp::Pow: return 4;
  }
  return 0;
}

void write_number(std::string& out, double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

void write(std::string& out, const Node& n);

void write_at_least(std::string& out, const Node& n, int min_level) {
  if (level(n) < min_level) {
    out += '(';
    write(out, n);
    out += ')';
  } else {
    write(out, n);
  }
}

void write(std::string& out, const Node& n) {
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Constant>) {
          if (std::signbit(d.value)) {
            out += '-';
            write_number(out, -d.value);
          } else {
            write_number(out, d.value);
          }
        } else if constexpr (std::is_same_v<D, Variable>) {
          out += d.name;
        } else if constexpr (std::is_same_v<D, Unary>) {
          if (d.op == UnaryOp::Neg) {
            out += '-';
            write_at_least(out, *d.arg, 3);
          } else {
            out += function_name(d.op);
            out += '(';
            write(out, *d.arg);
            out += ')';
          }
        } else {
          switch (d.op) {
            case BinaryOp::Add:
            case BinaryOp::Sub:
              write_at_least(out, *d.lhs, 1);
              out += d.op == BinaryOp::Add ? " + " : " - ";
              write_at_least(out, *d.rhs, 2);
              break;
            case BinaryOp::Mul:
            case BinaryOp::Div:
              write_at_least(out, *d.lhs, 2);
              out += d.op == BinaryOp::Mul ? "*" : "/";
              write_at_least(out, *d.rhs, 3);
              break;
            case BinaryOp::Pow:
              write_at_least(out, *d.lhs, 5);
              out += '^';
              write_at_least(out, *d.rhs, 3);
              break;
          }
        }
      },
      n.data);
}

void collect(const Node& n, std::set<std::string>& out) {
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Variable>) {
          out.insert(d.name);
        } else if constexpr (std::is_same_v<D, Unary>) {
          collect(*d.arg, out);
        } else if constexpr (std::is_same_v<D, Binary>) {
          collect(*d.lhs, out);
          collect(*d.rhs, out);
        }
      },
      n.data);
}

bool equal(const Node& a, const Node& b) {
  if (&a == &b) return true;
  if (a.data.index() != b.data.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using D = std::decay_t<decltype(x)>;
        const auto& y = std::get<D>(b.data);
        if constexpr (std::is_same_v<D, Constant>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<D, Variable>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<D, Unary>) {
          return x.op == y.op && equal(*x.arg, *y.arg);
        } else {
          return x.op == y.op && equal(*x.lhs, *y.lhs) && equal(*x.rhs, *y.rhs);
        }
      },
      a.data);
}

NodePtr substitute(const NodePtr& n, const std::map<std::string, double>& values) {
  return std::visit(
      [&](const auto& d) -> NodePtr {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Constant>) {
          return n;
        } else if constexpr (std::is_same_v<D, Variable>) {
          auto it = values.find(d.name);
          return it == values.end() ? n : make({Constant{it->second}});
        } else if constexpr (std::is_same_v<D, Unary>) {
          NodePtr arg = substitute(d.arg, values);
          NodePtr out = arg == d.arg ? n : make({Unary{d.op, arg}});
          if (std::holds_alternative<Constant>(arg->data))
            return make({Constant{detail::walk<double>(*out, [](const std::string&) { return 0.0; })}});
          return out;
        } else {
          NodePtr lhs = substitute(d.lhs, values);
          NodePtr rhs = substitute(d.rhs, values);
          NodePtr out = (lhs == d.lhs && rhs == d.rhs) ? n : make({Binary{d.op, lhs, rhs}});
          if (std::holds_alternative<Constant>(lhs->data) && std::holds_alternative<Constant>(rhs->data))
            return make({Constant{detail::walk<double>(*out, [](const std::string&) { return 0.0; })}});
          return out;
        }
      },
      n->data);
}

}  // namespace

// ---------------------------------------------------------------------------

Expression::Expression() : root_(make({Constant{0.0}})) {}
Expression::Expression(NodePtr root) : root_(std::move(root)) {}

Expression Expression::constant(double value) { return Expression(make({Constant{value}})); }
Expression Expression::variable(std::string name) { return Expression(make({Variable{std::move(name)}})); }
Expression Expression::unary(UnaryOp op, const Expression& arg) { return Expression(make({Unary{op, arg.root_}})); }
Expression Expression::binary(BinaryOp op, const Expression& lhs, const Expression& rhs) {
  return Expression(make({Binary{op, lhs.root_, rhs.root_}}));
}

std::string Expression::to_string() const { return serialize(*this); }

bool operator==(const Expression& a, const Expression& b) { return equal(*a.root_, *b.root_); }

ParseError::ParseError(const std::string& message, std::size_t offset, std::size_t line, std::size_t column,
                       std::string expected)
    : InputError(message), offset_(offset), line_(line), column_(column), expected_(std::move(expected)) {}

Expression parse(std::string_view source) { return Parser(source).parse_all(); }

std::string serialize(const Node& n) {
  std::string out;
  write(out, n);
  return out;
}

std::string serialize(const Expression& e) { return serialize(e.root()); }

std::set<std::string> free_vars(const Expression& e) {
  std::set<std::string> out;
  collect(e.root(), out);
  return out;
}

namespace detail {

bool has_variables(const Node& n) {
  if (std::holds_alternative<Variable>(n.data)) return true;
  if (const auto* u = std::get_if<Unary>(&n.data)) return has_variables(*u->arg);
  if (const auto* b = std::get_if<Binary>(&n.data)) return has_variables(*b->lhs) || has_variables(*b->rhs);
  return false;
}

}  // namespace detail

bool is_identifier(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0])) || static_cast<unsigned char>(s[0]) >= 128)
    return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return c < 128 && (std::isalnum(c) || c == '_');
  });
}

bool is_function_name(std::string_view s) {
  return std::any_of(kFunctions.begin(), kFunctions.end(), [&](const auto& f) { return f.first == s; });
}

Expression substitute_constants(const Expression& e, const std::map<std::string, double>& values) {
  return Expression(substitute(e.root_ptr(), values));
}

// ---------------------------------------------------------------------------

Program Program::compile(const Expression& e, std::span<const std::string> slots,
                         const std::map<std::string, double>& constants) {
  Program p;
  p.source_ = constants.empty() ? e : substitute_constants(e, constants);
  p.emit(p.source_.root(), slots);
  std::size_t depth = 0;
  for (const Instr& in : p.code_) {
    if (in.kind == Kind::Const || in.kind == Kind::Slot) p.depth_ = std::max(p.depth_, ++depth);
    if (in.kind == Kind::Binary) --depth;
  }
  return p;
}

void Program::emit(const Node& n, std::span<const std::string> slots) {
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Constant>) {
          code_.push_back({Kind::Const, 0, d.value, &n});
        } else if constexpr (std::is_same_v<D, Variable>) {
          const auto it = std::find(slots.begin(), slots.end(), d.name);
          if (it == slots.end()) throw UnboundVariableError(d.name);
          code_.push_back({Kind::Slot, static_cast<int>(it - slots.begin()), 0.0, &n});
        } else if constexpr (std::is_same_v<D, Unary>) {
          emit(*d.arg, slots);
          code_.push_back({Kind::Unary, static_cast<int>(d.op), 0.0, &n});
        } else {
          emit(*d.lhs, slots);
          if (d.op == BinaryOp::Pow) {
            if (const auto c = detail::constant_exponent(*d.rhs)) {
              code_.push_back({Kind::PowConst, 0, *c, &n});
              return;
            }
          }
          emit(*d.rhs, slots);
          code_.push_back({Kind::Binary, static_cast<int>(d.op), 0.0, &n});
        }
      },
      n.data);
}

}  // namespace vaknh::expr
