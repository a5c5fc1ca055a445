#include "vaknh/nonholonomic.hpp"

#include "vaknh/autodiff.hpp"
#include "vaknh/vakonomic.hpp"

namespace vaknh {

std::vector<double> dependent_momenta(const SystemDef& sys, const NhState& s) {
  const auto grad = velocity_gradient(sys, s);
  std::vector<double> pi(sys.m());
  for (std::size_t al = 0; al < sys.m(); ++al) pi[al] = grad[sys.dependent_index(al)];
  return pi;
}

Matrix ctilde(const SystemDef& sys, const NhState& s) {
  return cbar(sys, VakState{s.q, s.v, dependent_momenta(sys, s)});
}

NhDerivative nh_rhs(const SystemDef& sys, const NhState& s) {
  const auto pi = dependent_momenta(sys, s);
  detail::AccelSystem a = detail::accel_system(sys, s.q, s.v, pi);
  NhDerivative d;
  d.dv = detail::solve_accel(a, "C-tilde", s.q);
  d.dq = std::move(a.dq);
  return d;
}

std::vector<double> ambient_acceleration(const SystemDef& sys, const NhState& s, std::span<const double> dv) {
  sys.check(s);
  if (dv.size() != sys.k()) throw InputError("acceleration has wrong length");
  const std::size_t n = sys.n();
  const std::size_t k = sys.k();
  const auto dq = complete_velocities(sys, s);

  std::vector<double> x(s.q.begin(), s.q.end());
  x.insert(x.end(), s.v.begin(), s.v.end());
  std::vector<double> dir(dq.begin(), dq.end());
  dir.insert(dir.end(), dv.begin(), dv.end());
  auto f = [&](std::span<const HyperDual> in) {
    const auto slots = sys.complete<HyperDual>(in.subspan(0, n), in.subspan(n, k));
    return std::vector<HyperDual>(slots.begin() + static_cast<std::ptrdiff_t>(n), slots.end());
  };
  return ad::directional(f, x, dir);
}

std::vector<double> euler_lagrange(const SystemDef& sys, const NhState& s, std::span<const double> dv) {
  const std::size_t n = sys.n();
  const auto ddq = ambient_acceleration(sys, s, dv);
  const auto slots = sys.complete<double>(s.q, s.v);

  // d1 carries the time direction (q̇, q̈), d2 selects ∂/∂q̇^A.
  std::vector<HyperDual> x(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = HyperDual(slots[i], slots[n + i], 0.0, 0.0);
    x[n + i] = HyperDual(slots[n + i], ddq[i], 0.0, 0.0);
  }
  std::vector<HyperDual> y(slots.begin(), slots.end());
  std::vector<double> out(n);
  for (std::size_t A = 0; A < n; ++A) {
    x[n + A].d2 = 1.0;
    const double ddt = sys.eval_lagrangian<HyperDual>(x).d12;
    x[n + A].d2 = 0.0;
    y[A].d1 = 1.0;
    const double dq = sys.eval_lagrangian<HyperDual>(y).d1;
    y[A].d1 = 0.0;
    out[A] = ddt - dq;
  }
  return out;
}

std::vector<double> nh_multipliers(const SystemDef& sys, const NhState& s, const NhDerivative& accel) {
  const auto el = euler_lagrange(sys, s, accel.dv);
  std::vector<double> lambda(sys.m());
  for (std::size_t al = 0; al < sys.m(); ++al) lambda[al] = -el[sys.dependent_index(al)];
  return lambda;
}

std::vector<double> legendre_lift(const SystemDef& sys, const NhState& s) { return velocity_gradient(sys, s); }

double energy(const SystemDef& sys, const NhState& s) {
  const auto slots = sys.complete<double>(s.q, s.v);
  const auto p = velocity_gradient(sys, s);
  double e = -sys.eval_lagrangian<double>(slots);
  for (std::size_t A = 0; A < sys.n(); ++A) e += p[A] * slots[sys.n() + A];
  return e;
}

}  // namespace vaknh
