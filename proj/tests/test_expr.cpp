#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "oracles/reference.hpp"
#include "vaknh/expr.hpp"

using namespace vaknh;
using namespace vaknh::expr;

namespace {

Expression V(const char* n) { return Expression::variable(n); }
Expression C(double x) { return Expression::constant(x); }
Expression B(BinaryOp op, const Expression& a, const Expression& b) { return Expression::binary(op, a, b); }

bool same_bits(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

TEST_CASE("parse: grammar examples") {
  const auto sq = [](const char* v) { return B(BinaryOp::Pow, V(v), C(2)); };
  const Expression expected =
      B(BinaryOp::Mul, C(0.5), B(BinaryOp::Add, B(BinaryOp::Add, sq("dx"), sq("dy")), sq("dz")));
  CHECK(parse("0.5*(dx^2+dy^2+dz^2)") == expected);
  CHECK(parse("y*dx") == B(BinaryOp::Mul, V("y"), V("dx")));
  CHECK(parse("dz - (y^2/2)*dx") ==
        B(BinaryOp::Sub, V("dz"), B(BinaryOp::Mul, B(BinaryOp::Div, sq("y"), C(2)), V("dx"))));
  CHECK(parse("  y \t*\n dx ") == parse("y*dx"));
}

TEST_CASE("parse: precedence and associativity") {
  CHECK(parse("-x^2") == Expression::unary(UnaryOp::Neg, B(BinaryOp::Pow, V("x"), C(2))));
  CHECK(parse("a-b-c") == B(BinaryOp::Sub, B(BinaryOp::Sub, V("a"), V("b")), V("c")));
  CHECK(parse("a/b*c") == B(BinaryOp::Mul, B(BinaryOp::Div, V("a"), V("b")), V("c")));
  CHECK(parse("2^3^2") == B(BinaryOp::Pow, C(2), B(BinaryOp::Pow, C(3), C(2))));
  CHECK(evaluate<double>(parse("2^3^2"), {}) == 512.0);
  CHECK(parse("x^-2") == B(BinaryOp::Pow, V("x"), Expression::unary(UnaryOp::Neg, C(2))));
  CHECK(parse("sin(x)+1") == B(BinaryOp::Add, Expression::unary(UnaryOp::Sin, V("x")), C(1)));
  CHECK(parse("1.5e-3") == C(1.5e-3));
  CHECK(parse(".25") == C(0.25));
  CHECK(parse("a_1*B2") == B(BinaryOp::Mul, V("a_1"), V("B2")));
}

TEST_CASE("parse: errors carry position and expectation") {
  try {
    parse("1 +");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 3);
    CHECK(e.line() == 1);
    CHECK(e.column() == 4);
    CHECK_FALSE(e.expected().empty());
  }
  try {
    parse("foo(x)");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 0);
    CHECK(std::string(e.what()).find("foo") != std::string::npos);
  }
  try {
    parse("x +\n  * y");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("x y"), ParseError);
  CHECK_THROWS_AS(parse("2x"), ParseError);
  CHECK_THROWS_AS(parse("(x"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("x $ y"), ParseError);
  CHECK_THROWS_AS(parse("sin x"), ParseError);
  CHECK_THROWS_AS(parse("1e"), ParseError);
  CHECK_THROWS_AS(parse("sin"), ParseError);
}

TEST_CASE("evaluate: examples and errors") {
  CHECK(evaluate<double>(parse("y*dx"), {{"y", 3}, {"dx", 2}}) == 6.0);
  CHECK(evaluate<double>(parse("0.5*(dx^2+dy^2+dz^2)"), {{"dx", 1}, {"dy", 1}, {"dz", 1}}) == 1.5);
  CHECK_THROWS_AS(evaluate<double>(parse("sqrt(x)"), {{"x", -1}}), DomainError);
  CHECK_THROWS_AS(evaluate<double>(parse("log(x)"), {{"x", 0}}), DomainError);
  CHECK_THROWS_AS(evaluate<double>(parse("x^0.5"), {{"x", -4}}), DomainError);
  CHECK(evaluate<double>(parse("x^3"), {{"x", -2}}) == -8.0);
  CHECK(evaluate<double>(parse("x^-2"), {{"x", -2}}) == 0.25);
  try {
    evaluate<double>(parse("1 + a/(b-b)"), {{"a", 1}, {"b", 2}});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.subexpression() == "a/(b - b)");
  }
  try {
    evaluate<double>(parse("x + q"), {{"x", 1}});
    FAIL("expected UnboundVariableError");
  } catch (const UnboundVariableError& e) {
    CHECK(e.name() == "q");
  }
  const std::map<std::string, double> env{{"x", 2}};
  (void)evaluate<double>(parse("x*x"), env);
  CHECK(env.size() == 1);
}

TEST_CASE("free_vars") {
  CHECK(free_vars(parse("y*dx")) == std::set<std::string>{"y", "dx"});
  CHECK(free_vars(parse("3.0")).empty());
  CHECK(free_vars(parse("dz - (y^2/2)*dx")) == std::set<std::string>{"dz", "y", "dx"});
}

TEST_CASE("identifier and function names") {
  CHECK(is_identifier("dK2"));
  CHECK(is_identifier("p_z"));
  CHECK_FALSE(is_identifier("2x"));
  CHECK_FALSE(is_identifier("_x"));
  CHECK_FALSE(is_identifier(""));
  CHECK(is_function_name("sqrt"));
  CHECK_FALSE(is_function_name("x"));
}

TEST_CASE("round trip on a random corpus") {
  std::mt19937_64 rng(20261018);
  const std::vector<std::string> vars{"x", "y", "dx", "dz", "p_z", "K1"};
  for (int i = 0; i < 2000; ++i) {
    const std::string src = oracle::random_expression(rng, vars, 5);
    const Expression e = parse(src);
    const Expression again = parse(serialize(e));
    REQUIRE_MESSAGE(again == e, src << " -> " << serialize(e));
    CHECK(serialize(again) == serialize(e));
  }
}

TEST_CASE("serialization is idempotent on arbitrary trees") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> vars{"a", "b"};
  for (int i = 0; i < 1000; ++i) {
    const Expression t = oracle::random_tree(rng, vars, 5);
    const std::string s = serialize(t);
    const Expression e = parse(s);
    CHECK(serialize(e) == s);
    CHECK(parse(serialize(e)) == e);
  }
}

TEST_CASE("evaluate agrees with the reference evaluator to 0 ULP") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> vars{"x", "y", "z"};
  int compared = 0;
  for (int i = 0; i < 3000; ++i) {
    const Expression e = oracle::random_tree(rng, vars, 5);
    std::map<std::string, double> env;
    for (const auto& v : vars) env[v] = std::uniform_real_distribution<double>(-3, 3)(rng);
    double lib = 0.0;
    bool lib_threw = false;
    try {
      lib = evaluate<double>(e, env);
    } catch (const DomainError&) {
      lib_threw = true;
    }
    double ref = 0.0;
    bool ref_threw = false;
    try {
      ref = oracle::ref_eval(e, env);
    } catch (const std::domain_error&) {
      ref_threw = true;
    }
    if (lib_threw) {
      // the library also rejects NaN operands that the reference lets through
      CHECK((ref_threw || std::isnan(ref)));
      continue;
    }
    REQUIRE_FALSE(ref_threw);
    CHECK_MESSAGE(same_bits(lib, ref), serialize(e));
    ++compared;
  }
  CHECK(compared > 1000);
}

TEST_CASE("compiled programs match the tree walker bitwise") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> slots{"x", "y", "z"};
  for (int i = 0; i < 1000; ++i) {
    const Expression e = oracle::random_tree(rng, slots, 5);
    const Program p = Program::compile(e, slots);
    const std::vector<double> x = {std::uniform_real_distribution<double>(-2, 2)(rng),
                                   std::uniform_real_distribution<double>(-2, 2)(rng),
                                   std::uniform_real_distribution<double>(-2, 2)(rng)};
    const std::map<std::string, double> env{{"x", x[0]}, {"y", x[1]}, {"z", x[2]}};
    try {
      const double a = evaluate<double>(e, env);
      CHECK(same_bits(a, p.run<double>(x)));
    } catch (const DomainError&) {
      CHECK_THROWS_AS(p.run<double>(x), DomainError);
    }
  }
  CHECK_THROWS_AS(Program::compile(parse("x + w"), slots), UnboundVariableError);
}

TEST_CASE("substitute_constants folds parameter subtrees") {
  const Expression e = substitute_constants(parse("K1^(2*a1)*x"), {{"a1", 0.3}});
  CHECK(e == parse("K1^0.6*x"));
  CHECK(free_vars(e) == std::set<std::string>{"K1", "x"});
  CHECK(substitute_constants(parse("-(eps^2/4)*k"), {{"eps", 2}}) == B(BinaryOp::Mul, C(-1), V("k")));
}
