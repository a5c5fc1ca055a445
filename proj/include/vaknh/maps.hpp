#pragma once

#include <span>
#include <vector>

#include "vaknh/system.hpp"

namespace vaknh {

/// A point (α, v) of T*Q ⊕ M: a full covector over q plus base velocities.
struct CovectorPoint {
  std::vector<double> q;
  std::vector<double> p;  // n components
  std::vector<double> v;  // n − m base velocities
};

enum class ShiftDirection { forward, inverse };

/// forward: p ← p − ∂L/∂q̇ ; inverse: p ← p + ∂L/∂q̇ (completed velocities).
CovectorPoint legendre_shift(const SystemDef& sys, const CovectorPoint& pt, ShiftDirection direction);

/// (q, v, p_α) ↦ (q, v).
NhState upsilon(const SystemDef& sys, const VakState& s);

/// λ_α = ∂L/∂q̇^α − p_α.
std::vector<double> mu_to_lambda(const SystemDef& sys, const VakState& s);

/// Inverse of mu_to_lambda at fixed (q, v): p_α = ∂L/∂q̇^α − λ_α.
VakState lambda_to_mu(const SystemDef& sys, const NhState& s, std::span<const double> lambda);

/// Full covector of a W₁ point: p_a from w1_momenta, p_α from the state,
/// placed in coordinate order.
std::vector<double> w1_covector(const SystemDef& sys, const VakState& s);

/// Component a: λ_a + λ_α ∂Ψ^α/∂q̇^a. Requires a verified-linear system.
std::vector<double> vg_residual(const SystemDef& sys, std::span<const double> lambda_full, const NhState& s);

}  // namespace vaknh
