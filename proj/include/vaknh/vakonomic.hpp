#pragma once

#include <span>
#include <vector>

#include "vaknh/linalg.hpp"
#include "vaknh/system.hpp"

namespace vaknh {

/// Time derivative of a W₁ state.
struct VakDerivative {
  std::vector<double> dq;  // q̇^A, dependent entries equal Ψ^α(q, v)
  std::vector<double> dv;  // q̈^a
  std::vector<double> dp;  // ṗ_α
};

struct SymplecticReport {
  double det = 0.0;
  bool invertible = false;
};

struct Compatibility {
  Matrix c;
  /// Set when the ambient velocity Hessian changes away from v = 0, so the
  /// v = 0 evaluation is only a convention.
  bool velocity_dependent_hessian = false;
};

/// C̄_ab = ∂²L̃/∂q̇^a∂q̇^b − p_α ∂²Ψ^α/∂q̇^a∂q̇^b.
Matrix cbar(const SystemDef& sys, const VakState& s);

/// det C̄ and the relative invertibility verdict.
SymplecticReport symplectic_check(const SystemDef& sys, const VakState& s);

/// C^{αβ} built from the inverse ambient velocity Hessian at (q, v = 0).
/// Requires a verified-linear system and a regular Lagrangian.
Compatibility compatibility(const SystemDef& sys, std::span<const double> q);
Matrix compatibility_matrix(const SystemDef& sys, std::span<const double> q);

/// Eliminated momenta p_a = ∂L̃/∂q̇^a − p_α ∂Ψ^α/∂q̇^a.
std::vector<double> w1_momenta(const SystemDef& sys, const VakState& s);

/// H = p_a q̇^a + p_α Ψ^α − L̃.
double hamiltonian(const SystemDef& sys, const VakState& s);

/// Vakonomic vector field on W₁. Throws SingularMatrixError when C̄ fails
/// the relative invertibility test.
VakDerivative vak_rhs(const SystemDef& sys, const VakState& s);

namespace detail {

/// Linear system C q̈ = r shared by both dynamics. With F = L̃ − p_β Ψ^β
/// (p held fixed):
///   C_ab  = F_{v^a v^b}
///   ṗ_α   = F_{q^α}
///   r_a   = F_{q^a} + Ψ^α_{v^a} ṗ_α − F_{v^a q^B} q̇^B
struct AccelSystem {
  Matrix c;
  std::vector<double> r;
  std::vector<double> pdot;
  std::vector<double> dq;
};

AccelSystem accel_system(const SystemDef& sys, std::span<const double> q, std::span<const double> v,
                         std::span<const double> p);

/// Solves C q̈ = r, throwing SingularMatrixError (naming `what`, det and q)
/// when C is not numerically invertible.
std::vector<double> solve_accel(const AccelSystem& a, const char* what, std::span<const double> q);

std::string format_vector(std::span<const double> x);

}  // namespace detail

}  // namespace vaknh
