#pragma once

#include <span>
#include <vector>

#include "vaknh/linalg.hpp"
#include "vaknh/system.hpp"

namespace vaknh {

struct NhDerivative {
  std::vector<double> dq;  // q̇^A, dependent entries equal Ψ^α(q, v)
  std::vector<double> dv;  // q̈^a
};

/// The multipliers π_α = ∂L/∂q̇^α at completed velocities.
std::vector<double> dependent_momenta(const SystemDef& sys, const NhState& s);

/// C̃_ab = ∂²L̃/∂q̇^a∂q̇^b − π_α ∂²Ψ^α/∂q̇^a∂q̇^b.
Matrix ctilde(const SystemDef& sys, const NhState& s);

/// Chetaev dynamics on M. The reduced equations coincide with the
/// vakonomic acceleration evaluated at p_α = π_α; the time derivative of π
/// drops out. Throws SingularMatrixError when C̃ fails the invertibility test.
NhDerivative nh_rhs(const SystemDef& sys, const NhState& s);

/// λ_α = ∂L/∂q^α − d/dt(∂L/∂q̇^α) along the flow through s.
std::vector<double> nh_multipliers(const SystemDef& sys, const NhState& s, const NhDerivative& accel);

/// p_A = ∂L/∂q̇^A at completed velocities.
std::vector<double> legendre_lift(const SystemDef& sys, const NhState& s);

/// E_L = q̇^A ∂L/∂q̇^A − L at completed velocities.
double energy(const SystemDef& sys, const NhState& s);

/// Full second derivative q̈^A of the completed curve: q̈^a = dv and
/// q̈^α = d/dt Ψ^α(q, v).
std::vector<double> ambient_acceleration(const SystemDef& sys, const NhState& s, std::span<const double> dv);

/// d/dt(∂L/∂q̇^A) − ∂L/∂q^A along the completed curve with base
/// accelerations dv.
std::vector<double> euler_lagrange(const SystemDef& sys, const NhState& s, std::span<const double> dv);

}  // namespace vaknh
