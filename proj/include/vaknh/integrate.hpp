#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vaknh/comparison.hpp"
#include "vaknh/system.hpp"

namespace vaknh {

enum class Dynamics { vak, nh };
enum class Method { rk4, rk45 };

struct IntegrateOptions {
  double t_end = 1.0;
  Method method = Method::rk45;
  double dt = 1e-3;  // rk4 step; also caps the first rk45 step guess
  double rtol = 1e-9;
  double atol = 1e-11;
  std::size_t max_steps = 10'000'000;
  std::size_t max_rejections = 50;  // consecutive rejections before failure
  std::vector<Candidate> candidates;
};

class IntegrationError : public NumericError {
public:
  using NumericError::NumericError;
};

/// Accepted steps of an integration. For nonholonomic runs the states carry
/// an empty p.
struct Trajectory {
  Dynamics dynamics = Dynamics::vak;
  std::vector<double> times;
  std::vector<VakState> states;
  std::vector<std::string> monitor_names;
  std::vector<std::vector<double>> monitors;  // monitors[i] aligned with times

  const std::vector<double>& monitor(const std::string& name) const;
};

/// Monitors recorded at every accepted step:
///   vak: H, dp_<dep>...          nh: E_L, lambda_<dep>...
/// followed by G_<candidate> for each candidate entry.
Trajectory integrate(const SystemDef& sys, Dynamics dynamics, const VakState& s0, const IntegrateOptions& opts);
Trajectory integrate_vak(const SystemDef& sys, const VakState& s0, const IntegrateOptions& opts);
Trajectory integrate_nh(const SystemDef& sys, const NhState& s0, const IntegrateOptions& opts);

struct DriftReport {
  std::string quantity;  // "H" or "E_L"
  std::vector<double> drift;
  double max_drift = 0.0;
  std::map<std::string, std::vector<double>> candidates;
  std::map<std::string, double> candidate_max_abs;
};

DriftReport drift_report(const SystemDef& sys, const Trajectory& traj);

/// CSV with header t,<coords>,d<base>[,p_<dep>][,monitors], 17 significant
/// digits per value.
void write_csv(std::ostream& out, const SystemDef& sys, const Trajectory& traj);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(std::istream& in);

}  // namespace vaknh
