#include "vaknh/autodiff.hpp"

#include <algorithm>

namespace vaknh::ad {

namespace {

std::map<std::string, HyperDual> seed(const Env& env, std::string_view v1,
                                      std::string_view v2) {
  std::map<std::string, HyperDual> out;
  for (const auto& [name, value] : env) out.emplace(name, HyperDual(value));
  auto it1 = out.find(std::string(v1));
  if (it1 == out.end()) throw UnboundVariableError(std::string(v1));
  auto it2 = out.find(std::string(v2));
  if (it2 == out.end()) throw UnboundVariableError(std::string(v2));
  it1->second.d1 = 1.0;
  it2->second.d2 = 1.0;
  return out;
}

}  // namespace

double partial(const expr::Expression& e, const Env& env, std::string_view v) {
  return expr::evaluate(e, seed(env, v, v)).d1;
}

double second_partial(const expr::Expression& e, const Env& env, std::string_view v1, std::string_view v2) {
  // canonical seeding order keeps the result bitwise symmetric
  if (v2 < v1) std::swap(v1, v2);
  return expr::evaluate(e, seed(env, v1, v2)).d12;
}

std::vector<double> gradient(const expr::Expression& e, const Env& env, std::span<const std::string> vars) {
  std::vector<double> g;
  g.reserve(vars.size());
  for (const auto& v : vars) g.push_back(partial(e, env, v));
  return g;
}

std::vector<Jet> jets(const VectorFunction& f, std::span<const double> x, std::size_t outputs,
                      const std::function<bool(std::size_t, std::size_t)>& need) {
  const std::size_t n = x.size();
  std::vector<Jet> out(outputs);
  for (auto& j : out) {
    j.grad.assign(n, 0.0);
    j.hess = Matrix(n, n);
  }
  std::vector<HyperDual> in(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i; k < n; ++k) {
      if (k != i && need && !need(i, k)) continue;
      for (std::size_t r = 0; r < n; ++r) in[r] = HyperDual(x[r]);
      in[i].d1 = 1.0;
      in[k].d2 = 1.0;
      const std::vector<HyperDual> y = f(in);
      for (std::size_t o = 0; o < outputs; ++o) {
        if (k == i) {
          out[o].value = y[o].value;
          out[o].grad[i] = y[o].d1;
        }
        out[o].hess(i, k) = y[o].d12;
        out[o].hess(k, i) = y[o].d12;
      }
    }
  }
  if (n == 0) {
    const std::vector<HyperDual> y = f(in);
    for (std::size_t o = 0; o < outputs; ++o) out[o].value = y[o].value;
  }
  return out;
}

std::vector<double> directional(const VectorFunction& f, std::span<const double> x,
                                std::span<const double> direction) {
  std::vector<HyperDual> in(x.size());
  for (std::size_t r = 0; r < x.size(); ++r) in[r] = HyperDual(x[r], direction[r], 0.0, 0.0);
  const std::vector<HyperDual> y = f(in);
  std::vector<double> out(y.size());
  std::transform(y.begin(), y.end(), out.begin(), [](const HyperDual& h) { return h.d1; });
  return out;
}

}  // namespace vaknh::ad
