#include "vaknh/vakonomic.hpp"

#include <cmath>
#include <sstream>

#include "vaknh/autodiff.hpp"

namespace vaknh {

namespace detail {

std::string format_vector(std::span<const double> x) {
  std::ostringstream out;
  out.precision(17);
  out << '(';
  for (std::size_t i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x[i];
  out << ')';
  return out.str();
}

namespace {

// F(q, v) = L̃ − p_β Ψ^β as a function of x = (q, v).
ad::VectorFunction shifted_lagrangian(const SystemDef& sys, std::span<const double> p) {
  return [&sys, p](std::span<const HyperDual> x) {
    const std::size_t n = sys.n();
    const auto slots = sys.complete<HyperDual>(x.subspan(0, n), x.subspan(n, sys.k()));
    HyperDual f = sys.eval_lagrangian<HyperDual>(slots);
    for (std::size_t al = 0; al < sys.m(); ++al) f -= p[al] * slots[n + sys.dependent_index(al)];
    return std::vector<HyperDual>{f};
  };
}

}  // namespace

AccelSystem accel_system(const SystemDef& sys, std::span<const double> q, std::span<const double> v,
                         std::span<const double> p) {
  const std::size_t n = sys.n();
  const std::size_t k = sys.k();
  const std::size_t m = sys.m();
  std::vector<double> x(q.begin(), q.end());
  x.insert(x.end(), v.begin(), v.end());

  const auto need = [n](std::size_t i, std::size_t j) { return i >= n || j >= n; };
  const ad::Jet F = ad::jets(shifted_lagrangian(sys, p), x, 1, need)[0];
  const RestrictedJets psi = restricted_jets(sys, q, v, false);

  AccelSystem out;
  const auto slots = sys.complete<double>(q, v);
  out.dq.assign(slots.begin() + static_cast<std::ptrdiff_t>(n), slots.end());

  out.c = Matrix(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) out.c(a, b) = F.hess(n + a, n + b);

  out.pdot.resize(m);
  for (std::size_t al = 0; al < m; ++al) out.pdot[al] = F.grad[sys.dependent_index(al)];

  out.r.resize(k);
  for (std::size_t a = 0; a < k; ++a) {
    double r = F.grad[sys.base_index(a)];
    for (std::size_t al = 0; al < m; ++al) r += psi.psi[al].grad[n + a] * out.pdot[al];
    for (std::size_t B = 0; B < n; ++B) r -= F.hess(n + a, B) * out.dq[B];
    out.r[a] = r;
  }
  return out;
}

std::vector<double> solve_accel(const AccelSystem& a, const char* what, std::span<const double> q) {
  const LU lu(a.c);
  const double det = lu.determinant();
  if (lu.singular() || !numerically_invertible(a.c, det))
    throw SingularMatrixError(std::string(what) + " is singular (det = " + std::to_string(det) + ") at q = " +
                                  format_vector(q),
                              det);
  return lu.solve(a.r);
}

}  // namespace detail

Matrix cbar(const SystemDef& sys, const VakState& s) {
  sys.check(s);
  const std::size_t n = sys.n();
  const std::size_t k = sys.k();
  const RestrictedJets j = restricted_jets(sys, s.q, s.v, true);
  Matrix c(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      double x = j.lagrangian.hess(n + a, n + b);
      for (std::size_t al = 0; al < sys.m(); ++al) x -= s.p[al] * j.psi[al].hess(n + a, n + b);
      c(a, b) = x;
      c(b, a) = x;
    }
  }
  return c;
}

SymplecticReport symplectic_check(const SystemDef& sys, const VakState& s) {
  const Matrix c = cbar(sys, s);
  const double det = determinant(c);
  return {det, numerically_invertible(c, det)};
}

namespace {

Matrix ambient_velocity_hessian(const SystemDef& sys, std::span<const double> q, std::span<const double> dq) {
  const std::size_t n = sys.n();
  std::vector<double> slots(q.begin(), q.end());
  slots.insert(slots.end(), dq.begin(), dq.end());
  Matrix h(n, n);
  std::vector<HyperDual> x(slots.begin(), slots.end());
  for (std::size_t A = 0; A < n; ++A) {
    for (std::size_t B = A; B < n; ++B) {
      x[n + A].d1 = 1.0;
      x[n + B].d2 = 1.0;
      const double v = sys.eval_lagrangian<HyperDual>(x).d12;
      x[n + A].d1 = 0.0;
      x[n + B].d2 = 0.0;
      h(A, B) = v;
      h(B, A) = v;
    }
  }
  return h;
}

}  // namespace

Compatibility compatibility(const SystemDef& sys, std::span<const double> q) {
  if (q.size() != sys.n()) throw InputError("compatibility: expected " + std::to_string(sys.n()) + " positions");
  if (!sys.verified_linear())
    throw LinearityError("compatibility matrix requires constraints linear in the velocities; '" + sys.name() +
                     "' is not");
  const std::size_t n = sys.n();
  const std::size_t k = sys.k();
  const std::size_t m = sys.m();

  const std::vector<double> zero(n, 0.0);
  const Matrix hess = ambient_velocity_hessian(sys, q, zero);
  const LU lu(hess);
  const double det = lu.determinant();
  if (lu.singular() || !numerically_invertible(hess, det))
    throw SingularMatrixError("ambient velocity Hessian is singular (det = " + std::to_string(det) +
                                  "); the Lagrangian is not regular at q = " + detail::format_vector(q),
                              det);
  Matrix w(n, n);
  for (std::size_t B = 0; B < n; ++B) {
    std::vector<double> e(n, 0.0);
    e[B] = 1.0;
    const auto col = lu.solve(e);
    for (std::size_t A = 0; A < n; ++A) w(A, B) = col[A];
  }

  const std::vector<double> vzero(k, 0.0);
  const RestrictedJets j = restricted_jets(sys, q, vzero, false);
  auto dpsi = [&](std::size_t al, std::size_t a) { return j.psi[al].grad[n + a]; };

  Compatibility out;
  out.c = Matrix(m, m);
  for (std::size_t al = 0; al < m; ++al) {
    for (std::size_t be = 0; be < m; ++be) {
      const std::size_t ia = sys.dependent_index(al);
      const std::size_t ib = sys.dependent_index(be);
      double c = w(ia, ib);
      for (std::size_t a = 0; a < k; ++a) {
        const std::size_t A = sys.base_index(a);
        c -= w(ia, A) * dpsi(be, a);
        c -= w(A, ib) * dpsi(al, a);
        for (std::size_t b = 0; b < k; ++b) c += w(A, sys.base_index(b)) * dpsi(al, a) * dpsi(be, b);
      }
      out.c(al, be) = c;
    }
  }

  try {
    const std::vector<double> probe(n, 0.5);
    const Matrix other = ambient_velocity_hessian(sys, q, probe);
    for (std::size_t A = 0; A < n; ++A)
      for (std::size_t B = 0; B < n; ++B)
        if (std::fabs(other(A, B) - hess(A, B)) > 1e-12 * (1.0 + std::fabs(hess(A, B))))
          out.velocity_dependent_hessian = true;
  } catch (const DomainError&) {
    out.velocity_dependent_hessian = true;
  }
  return out;
}

Matrix compatibility_matrix(const SystemDef& sys, std::span<const double> q) { return compatibility(sys, q).c; }

std::vector<double> w1_momenta(const SystemDef& sys, const VakState& s) {
  sys.check(s);
  const std::size_t n = sys.n();
  const std::size_t k = sys.k();
  std::vector<HyperDual> v(s.v.begin(), s.v.end());
  std::vector<HyperDual> q(s.q.begin(), s.q.end());
  std::vector<double> out(k);
  for (std::size_t a = 0; a < k; ++a) {
    v[a].d1 = 1.0;
    const auto slots = sys.complete<HyperDual>(q, v);
    HyperDual f = sys.eval_lagrangian<HyperDual>(slots);
    for (std::size_t al = 0; al < sys.m(); ++al) f -= s.p[al] * slots[n + sys.dependent_index(al)];
    out[a] = f.d1;
    v[a].d1 = 0.0;
  }
  return out;
}

double hamiltonian(const SystemDef& sys, const VakState& s) {
  const auto pa = w1_momenta(sys, s);
  const auto slots = sys.complete<double>(s.q, s.v);
  double h = 0.0;
  for (std::size_t a = 0; a < sys.k(); ++a) h += pa[a] * s.v[a];
  for (std::size_t al = 0; al < sys.m(); ++al) h += s.p[al] * slots[sys.n() + sys.dependent_index(al)];
  return h - sys.eval_lagrangian<double>(slots);
}

VakDerivative vak_rhs(const SystemDef& sys, const VakState& s) {
  sys.check(s);
  detail::AccelSystem a = detail::accel_system(sys, s.q, s.v, s.p);
  VakDerivative d;
  d.dv = detail::solve_accel(a, "C-bar", s.q);
  d.dq = std::move(a.dq);
  d.dp = std::move(a.pdot);
  return d;
}

}  // namespace vaknh
