#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vaknh/expr.hpp"

namespace oracle {

// Plain recursive evaluator over the AST, written independently of the
// library's walker. Same operation order: children left to right, integer
// powers by repeated multiplication.
double ref_eval(const vaknh::expr::Node& n, const std::map<std::string, double>& env);
double ref_eval(const vaknh::expr::Expression& e, const std::map<std::string, double>& env);

// Random well-formed expression text over the given variable names.
std::string random_expression(std::mt19937_64& rng, const std::vector<std::string>& vars, int depth);

// Random tree built directly from nodes (may contain negative constants).
vaknh::expr::Expression random_tree(std::mt19937_64& rng, const std::vector<std::string>& vars, int depth);

// Central difference of e in variable v with step h = 1e-6 * (|x| + 1).
double fd_partial(const vaknh::expr::Expression& e, std::map<std::string, double> env, const std::string& v);
// Central difference of the exact first partial in v1, taken along v2.
double fd_second_partial(const vaknh::expr::Expression& e, std::map<std::string, double> env, const std::string& v1,
                         const std::string& v2);

}  // namespace oracle
