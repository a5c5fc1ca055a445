#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vaknh/autodiff.hpp"
#include "vaknh/error.hpp"
#include "vaknh/expr.hpp"

namespace vaknh {

/// Point of the constraint submanifold M in coordinates (q^A, q̇^a).
struct NhState {
  std::vector<double> q;  // all n positions, in coordinate order
  std::vector<double> v;  // base velocities q̇^a, in base order
};

/// Point of W₁ in coordinates (q^A, q̇^a, p_α). The momenta p_a are never
/// stored; they follow from w1_momenta.
struct VakState {
  std::vector<double> q;
  std::vector<double> v;
  std::vector<double> p;  // p_α, in dependent order
};

class SystemFormatError : public InputError {
public:
  SystemFormatError(std::size_t line, const std::string& what)
      : InputError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class AdmissibilityError : public InputError {
public:
  AdmissibilityError(std::string dependent, const std::string& what)
      : InputError(what), dependent_(std::move(dependent)) {}
  const std::string& dependent() const noexcept { return dependent_; }

private:
  std::string dependent_;
};

/// Velocity name of a coordinate: `x` -> `dx`.
inline std::string velocity_name(std::string_view coord) { return "d" + std::string(coord); }
/// Name of the multiplier attached to a dependent coordinate: `z` -> `p_z`.
inline std::string multiplier_name(std::string_view coord) { return "p_" + std::string(coord); }

/// A Lagrangian on TQ together with constraints solved as q̇^α = Ψ^α(q, q̇^a).
///
/// Dependent and base coordinates are both kept in coordinate declaration
/// order. Construction validates the index partition, the variables of
/// every expression and the structural admissibility condition (no
/// dependent velocity inside any Ψ^α), then binds the expressions for
/// evaluation.
class SystemDef {
public:
  using Params = std::vector<std::pair<std::string, double>>;

  SystemDef(std::string name, std::vector<std::string> coords, std::vector<std::string> dependent,
            expr::Expression lagrangian, std::map<std::string, expr::Expression> psi, bool declared_linear,
            Params params = {});

  const std::string& name() const { return name_; }
  const std::vector<std::string>& coords() const { return coords_; }
  const std::vector<std::string>& dependent() const { return dependent_; }
  const std::vector<std::string>& base() const { return base_; }
  const Params& params() const { return params_; }
  const expr::Expression& lagrangian() const { return lagrangian_; }
  const expr::Expression& psi(std::size_t alpha) const { return psi_[alpha]; }
  const std::vector<expr::Expression>& psi() const { return psi_; }
  bool declared_linear() const { return declared_linear_; }
  /// Result of verify_linearity at construction (16 samples, fixed seed).
  bool verified_linear() const { return verified_linear_; }

  std::size_t n() const { return coords_.size(); }
  std::size_t m() const { return dependent_.size(); }
  std::size_t k() const { return base_.size(); }  // n - m

  /// Coordinate index of base coordinate a / dependent coordinate α.
  std::size_t base_index(std::size_t a) const { return base_index_[a]; }
  std::size_t dependent_index(std::size_t alpha) const { return dependent_index_[alpha]; }

  /// Slot layout [q^1..q^n, dq^1..dq^n] used by the bound expressions.
  const std::vector<std::string>& ambient_slots() const { return ambient_slots_; }
  /// Slot layout [q^1..q^n, dq^1..dq^n, p_α...] for candidate expressions.
  std::vector<std::string> state_slots() const;

  std::map<std::string, double> param_map() const { return {params_.begin(), params_.end()}; }

  /// Binds an arbitrary expression (e.g. a candidate) to `slots`, with the
  /// system parameters substituted.
  expr::Program bind(const expr::Expression& e, std::span<const std::string> slots) const;

  /// Ψ^α at ambient slots (dependent velocity slots are ignored).
  template <class T>
  std::vector<T> eval_psi(std::span<const T> ambient) const {
    std::vector<T> out;
    out.reserve(psi_programs_.size());
    for (const auto& p : psi_programs_) out.push_back(p.template run<T>(ambient));
    return out;
  }

  template <class T>
  T eval_lagrangian(std::span<const T> ambient) const {
    return lagrangian_program_.template run<T>(ambient);
  }

  /// Ambient slots [q, q̇] with q̇^a = v and q̇^α = Ψ^α(q, v).
  template <class T>
  std::vector<T> complete(std::span<const T> q, std::span<const T> v) const {
    std::vector<T> slots(2 * n(), T(0.0));
    for (std::size_t A = 0; A < n(); ++A) slots[A] = q[A];
    for (std::size_t a = 0; a < k(); ++a) slots[n() + base_index_[a]] = v[a];
    const std::vector<T> dep = eval_psi<T>(slots);
    for (std::size_t al = 0; al < m(); ++al) slots[n() + dependent_index_[al]] = dep[al];
    return slots;
  }

  void check(const NhState& s) const;
  void check(const VakState& s) const;

  friend bool operator==(const SystemDef& a, const SystemDef& b);

private:
  std::string name_;
  std::vector<std::string> coords_;
  std::vector<std::string> dependent_;
  std::vector<std::string> base_;
  Params params_;
  expr::Expression lagrangian_;
  std::vector<expr::Expression> psi_;
  bool declared_linear_ = false;
  bool verified_linear_ = false;

  std::vector<std::size_t> base_index_;
  std::vector<std::size_t> dependent_index_;
  std::vector<std::string> ambient_slots_;
  expr::Program lagrangian_program_;
  std::vector<expr::Program> psi_programs_;
};

/// Parses the line-oriented system file format:
///
///   name <text>
///   coords <id> <id> ...
///   dependent <id> ...
///   param <id> = <number>          (optional, repeatable)
///   lagrangian <expression>
///   psi <id> = <expression>        (one per dependent coordinate)
///   linear true|false
///
/// `#` starts a comment. Velocities are written `d<coord>`.
SystemDef load_system(std::string_view source);

/// Reads a file and parses it with load_system.
SystemDef load_system_file(const std::string& path);

std::string serialize(const SystemDef& sys);

/// Returns a copy of `sys` with the given parameter values replaced.
SystemDef with_params(const SystemDef& sys, const std::map<std::string, double>& overrides);

/// Full velocity vector (q̇^a = v, q̇^α = Ψ^α(q, v)).
std::vector<double> complete_velocities(const SystemDef& sys, const NhState& s);

/// L̃(q, v): the ambient Lagrangian at completed velocities.
double restricted_lagrangian(const SystemDef& sys, const NhState& s);

/// ∂L/∂q̇^A at completed velocities (the Legendre map on M).
std::vector<double> velocity_gradient(const SystemDef& sys, const NhState& s);

struct LinearityReport {
  bool linear = true;
  std::optional<NhState> witness;
  std::string reason;
};

/// Checks ∂²Ψ^α/∂q̇^a∂q̇^b = 0 and Ψ^α(q, 0) = 0 to 1e-12 at `samples`
/// pseudo-random states. Positions are drawn from [0.25, 1.75], velocities
/// from [-0.5, 0.5]; a sample whose evaluation hits a domain error is
/// redrawn up to 10 times before the error is reported.
LinearityReport verify_linearity(const SystemDef& sys, std::size_t samples, std::uint64_t seed);

/// Second-order jets of L̃ and of each Ψ^α over x = (q^1..q^n, q̇^1..q̇^k).
/// Mixed position–position entries of the Hessians are not computed.
struct RestrictedJets {
  ad::Jet lagrangian;
  std::vector<ad::Jet> psi;
};

RestrictedJets restricted_jets(const SystemDef& sys, std::span<const double> q, std::span<const double> v,
                               bool with_lagrangian = true);

}  // namespace vaknh
