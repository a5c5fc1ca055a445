#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vaknh/expr.hpp"
#include "vaknh/hyperdual.hpp"
#include "vaknh/linalg.hpp"

namespace vaknh::ad {

using Env = std::map<std::string, double>;

/// Exact ∂e/∂v at env.
double partial(const expr::Expression& e, const Env& env, std::string_view v);

/// Exact ∂²e/∂v1∂v2 at env. Bitwise symmetric in (v1, v2).
double second_partial(const expr::Expression& e, const Env& env, std::string_view v1, std::string_view v2);

/// Component i equals partial(e, env, vars[i]) bitwise.
std::vector<double> gradient(const expr::Expression& e, const Env& env, std::span<const std::string> vars);

/// Value, gradient and Hessian of one output of a vector function.
struct Jet {
  double value = 0.0;
  std::vector<double> grad;
  Matrix hess;
};

using VectorFunction = std::function<std::vector<HyperDual>(std::span<const HyperDual>)>;

/// Second-order jets of every output of f at x, one hyper-dual pass per
/// unordered variable pair (i ≤ j). `need` may skip pairs whose mixed
/// derivative is not wanted; skipped Hessian entries are left at zero.
std::vector<Jet> jets(const VectorFunction& f, std::span<const double> x, std::size_t outputs,
                      const std::function<bool(std::size_t, std::size_t)>& need = {});

/// Directional derivative of every output of f at x along `direction`.
std::vector<double> directional(const VectorFunction& f, std::span<const double> x,
                                std::span<const double> direction);

}  // namespace vaknh::ad
