#include "vaknh/maps.hpp"

#include "vaknh/nonholonomic.hpp"
#include "vaknh/vakonomic.hpp"

namespace vaknh {

CovectorPoint legendre_shift(const SystemDef& sys, const CovectorPoint& pt, ShiftDirection direction) {
  if (pt.p.size() != sys.n()) throw InputError("covector has wrong length");
  const NhState s{pt.q, pt.v};
  const auto leg = velocity_gradient(sys, s);
  CovectorPoint out = pt;
  for (std::size_t A = 0; A < sys.n(); ++A)
    out.p[A] = direction == ShiftDirection::forward ? pt.p[A] - leg[A] : pt.p[A] + leg[A];
  return out;
}

NhState upsilon(const SystemDef& sys, const VakState& s) {
  sys.check(s);
  return {s.q, s.v};
}

std::vector<double> mu_to_lambda(const SystemDef& sys, const VakState& s) {
  sys.check(s);
  auto lambda = dependent_momenta(sys, NhState{s.q, s.v});
  for (std::size_t al = 0; al < sys.m(); ++al) lambda[al] -= s.p[al];
  return lambda;
}

VakState lambda_to_mu(const SystemDef& sys, const NhState& s, std::span<const double> lambda) {
  if (lambda.size() != sys.m()) throw InputError("multiplier vector has wrong length");
  auto p = dependent_momenta(sys, s);
  for (std::size_t al = 0; al < sys.m(); ++al) p[al] -= lambda[al];
  return {s.q, s.v, std::move(p)};
}

std::vector<double> w1_covector(const SystemDef& sys, const VakState& s) {
  const auto pa = w1_momenta(sys, s);
  std::vector<double> out(sys.n());
  for (std::size_t a = 0; a < sys.k(); ++a) out[sys.base_index(a)] = pa[a];
  for (std::size_t al = 0; al < sys.m(); ++al) out[sys.dependent_index(al)] = s.p[al];
  return out;
}

std::vector<double> vg_residual(const SystemDef& sys, std::span<const double> lambda_full, const NhState& s) {
  if (!sys.verified_linear())
    throw LinearityError("the mixed-bundle residual requires constraints linear in the velocities");
  if (lambda_full.size() != sys.n()) throw InputError("covector has wrong length");
  sys.check(s);
  const RestrictedJets j = restricted_jets(sys, s.q, s.v, false);
  std::vector<double> out(sys.k());
  for (std::size_t a = 0; a < sys.k(); ++a) {
    double r = lambda_full[sys.base_index(a)];
    for (std::size_t al = 0; al < sys.m(); ++al)
      r += lambda_full[sys.dependent_index(al)] * j.psi[al].grad[sys.n() + a];
    out[a] = r;
  }
  return out;
}

}  // namespace vaknh
