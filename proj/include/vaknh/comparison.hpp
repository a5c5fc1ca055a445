#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vaknh/expr.hpp"
#include "vaknh/nonholonomic.hpp"
#include "vaknh/system.hpp"
#include "vaknh/vakonomic.hpp"

namespace vaknh {

/// R^α_{ab}, stored as m × k × k.
class Curvature {
public:
  Curvature(std::size_t m, std::size_t k) : m_(m), k_(k), data_(m * k * k, 0.0) {}
  double& operator()(std::size_t alpha, std::size_t a, std::size_t b) { return data_[(alpha * k_ + a) * k_ + b]; }
  double operator()(std::size_t alpha, std::size_t a, std::size_t b) const {
    return data_[(alpha * k_ + a) * k_ + b];
  }
  std::size_t m() const { return m_; }
  std::size_t k() const { return k_; }
  double max_abs() const;

private:
  std::size_t m_, k_;
  std::vector<double> data_;
};

/// R^α_{ab} = ∂_aΨ^α_b − ∂_bΨ^α_a + Ψ^β_a ∂_βΨ^α_b − Ψ^β_b ∂_βΨ^α_a with
/// Ψ^α_a = ∂Ψ^α/∂q̇^a. Requires a verified-linear system.
Curvature curvature(const SystemDef& sys, std::span<const double> q);

/// g_b = q̇^a (p_α − π_α) R^α_{ab}, indexed by base coordinate b.
/// C̄ ΔY = g holds with this indexing.
std::vector<double> g_residuals(const SystemDef& sys, const VakState& s);

/// ΔY = vak_rhs(s).dv − nh_rhs(Υ(s)).dv.
std::vector<double> field_residual(const SystemDef& sys, const VakState& s);

/// d/dt(∂L/∂q̇^A) − ∂L/∂q^A along the completed flow.
std::vector<double> el_residual(const SystemDef& sys, const NhState& s, const NhDerivative& accel);

/// A named defining function over the state variables q^A, dq^A, p_α.
/// Dependent velocities are replaced by Ψ through the chain rule. Several
/// candidates sharing a name cut out one submanifold jointly.
struct Candidate {
  std::string name;
  expr::Expression g;
};

/// Parses `name = expression` lines; `#` starts a comment.
std::vector<Candidate> parse_candidates(std::string_view text);

struct Tangency {
  std::vector<double> values;     // G_i(s)
  std::vector<double> residuals;  // dG_i · X_vk(s)
  double max_abs_value() const;
  double max_abs_residual() const;
};

/// Candidates bound once to a system for repeated evaluation.
class CandidateSet {
public:
  CandidateSet() = default;
  CandidateSet(const SystemDef& sys, const std::vector<Candidate>& candidates);

  bool empty() const { return entries_.empty(); }
  /// Distinct names, in first-appearance order.
  const std::vector<std::string>& names() const { return names_; }

  std::map<std::string, Tangency> tangency(const SystemDef& sys, const VakState& s,
                                           const VakDerivative& field) const;
  /// G values only; index follows entries() order.
  std::vector<double> values(const SystemDef& sys, const VakState& s) const;
  const std::vector<std::string>& entries() const { return entry_names_; }

private:
  std::vector<std::string> names_;
  std::vector<std::string> entry_names_;
  std::vector<expr::Program> entries_;
};

std::map<std::string, Tangency> tangency_residuals(const SystemDef& sys, const std::vector<Candidate>& candidates,
                                                   const VakState& s);

enum class PMode { random, legendre };

struct ScanOptions {
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  /// Sampling interval per state variable name (coords, d<base>, p_<dep>);
  /// unlisted variables use [-1, 1].
  std::map<std::string, std::pair<double, double>> bounds;
  PMode p_mode = PMode::random;
  double tol = 1e-10;
  /// 0 means hardware concurrency, further capped by VAKNH_THREADS.
  std::size_t threads = 0;
};

struct ComparisonRecord {
  std::size_t index = 0;
  VakState state;
  std::optional<std::vector<double>> g;  // absent for nonlinear systems
  std::vector<double> delta_y;
  std::map<std::string, Tangency> tangency;
  std::optional<std::string> skipped;  // reason when evaluation failed
};

struct ComparisonSummary {
  std::size_t samples = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::optional<double> fraction_g_zero;
  double fraction_delta_y_zero = 0.0;
  double tol = 0.0;
  std::uint64_t seed = 0;
};

struct ComparisonReport {
  std::string system;
  std::vector<ComparisonRecord> records;
  ComparisonSummary summary;
};

/// Evaluates one state; numeric failures propagate.
ComparisonRecord compare_state(const SystemDef& sys, const VakState& s, const CandidateSet& candidates);

/// Samples `count` states (sample i uses seed + i) and compares each.
/// Failing samples are recorded as skipped.
ComparisonReport scan(const SystemDef& sys, const ScanOptions& opts, const std::vector<Candidate>& candidates);

/// Recomputes the summary from the records.
ComparisonSummary summarize(const std::vector<ComparisonRecord>& records, double tol, std::uint64_t seed);

std::string to_json(const ComparisonRecord& r, const SystemDef& sys);
std::string to_json(const ComparisonReport& r, const SystemDef& sys);

}  // namespace vaknh
