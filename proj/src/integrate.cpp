#include "vaknh/integrate.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "vaknh/nonholonomic.hpp"
#include "vaknh/vakonomic.hpp"

namespace vaknh {

namespace {

using Vec = std::vector<double>;

class Problem {
public:
  Problem(const SystemDef& sys, Dynamics dyn) : sys_(sys), dyn_(dyn) {}

  std::size_t size() const { return sys_.n() + sys_.k() + (dyn_ == Dynamics::vak ? sys_.m() : 0); }

  VakState state(const Vec& y) const {
    const auto n = static_cast<std::ptrdiff_t>(sys_.n());
    const auto k = static_cast<std::ptrdiff_t>(sys_.k());
    return {{y.begin(), y.begin() + n}, {y.begin() + n, y.begin() + n + k}, {y.begin() + n + k, y.end()}};
  }

  Vec flatten(const VakState& s) const {
    Vec y(s.q);
    y.insert(y.end(), s.v.begin(), s.v.end());
    if (dyn_ == Dynamics::vak) y.insert(y.end(), s.p.begin(), s.p.end());
    return y;
  }

  Vec rhs(const Vec& y) const {
    const VakState s = state(y);
    Vec out;
    out.reserve(y.size());
    if (dyn_ == Dynamics::vak) {
      const auto d = vak_rhs(sys_, s);
      out.insert(out.end(), d.dq.begin(), d.dq.end());
      out.insert(out.end(), d.dv.begin(), d.dv.end());
      out.insert(out.end(), d.dp.begin(), d.dp.end());
    } else {
      const auto d = nh_rhs(sys_, NhState{s.q, s.v});
      out.insert(out.end(), d.dq.begin(), d.dq.end());
      out.insert(out.end(), d.dv.begin(), d.dv.end());
    }
    return out;
  }

private:
  const SystemDef& sys_;
  Dynamics dyn_;
};

std::string where(double t, const Vec& y, std::size_t n) {
  std::ostringstream out;
  out.precision(17);
  out << " at t = " << t << ", q = " << detail::format_vector(std::span<const double>(y.data(), n));
  return out.str();
}

class Recorder {
public:
  Recorder(const SystemDef& sys, Dynamics dyn, const std::vector<Candidate>& candidates, Trajectory& traj)
      : sys_(sys), dyn_(dyn), cands_(sys, candidates), traj_(traj) {
    auto& names = traj_.monitor_names;
    if (dyn == Dynamics::vak) {
      names.push_back("H");
      for (const auto& d : sys.dependent()) names.push_back("d" + multiplier_name(d));
    } else {
      names.push_back("E_L");
      for (const auto& d : sys.dependent()) names.push_back("lambda_" + d);
    }
    const auto& entries = cands_.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      // a name shared by several lines gets one indexed column per line
      const auto& c = entries[i];
      if (std::count(entries.begin(), entries.end(), c) == 1) {
        names.push_back("G_" + c);
      } else {
        const auto k = std::count(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(i), c);
        names.push_back("G_" + c + "[" + std::to_string(k) + "]");
      }
    }
    traj_.monitors.resize(names.size());
  }

  void record(double t, const VakState& s) {
    std::vector<double> row;
    VakState lifted = s;
    if (dyn_ == Dynamics::vak) {
      row.push_back(hamiltonian(sys_, s));
      const auto d = vak_rhs(sys_, s);
      row.insert(row.end(), d.dp.begin(), d.dp.end());
    } else {
      const NhState nh{s.q, s.v};
      row.push_back(energy(sys_, nh));
      const auto lambda = nh_multipliers(sys_, nh, nh_rhs(sys_, nh));
      row.insert(row.end(), lambda.begin(), lambda.end());
      lifted.p = dependent_momenta(sys_, nh);
    }
    if (!cands_.empty()) {
      const auto g = cands_.values(sys_, lifted);
      row.insert(row.end(), g.begin(), g.end());
    }
    traj_.times.push_back(t);
    traj_.states.push_back(s);
    for (std::size_t i = 0; i < row.size(); ++i) traj_.monitors[i].push_back(row[i]);
  }

private:
  const SystemDef& sys_;
  Dynamics dyn_;
  CandidateSet cands_;
  Trajectory& traj_;
};

Vec axpy(const Vec& y, double h, std::initializer_list<std::pair<double, const Vec*>> terms) {
  Vec out(y);
  for (const auto& [c, k] : terms) {
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * c * (*k)[i];
  }
  return out;
}

void run_rk4(const Problem& prob, Vec y, const IntegrateOptions& opts, Recorder& rec, std::size_t n) {
  if (!(opts.dt > 0.0)) throw InputError("rk4 needs dt > 0");
  const auto steps = static_cast<std::size_t>(std::ceil(opts.t_end / opts.dt - 1e-9));
  if (steps > opts.max_steps) throw IntegrationError("rk4 would need more than max_steps steps");
  double t = 0.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t_next = i == steps ? opts.t_end : static_cast<double>(i) * opts.dt;
    const double h = t_next - t;
    try {
      const Vec k1 = prob.rhs(y);
      const Vec k2 = prob.rhs(axpy(y, h, {{0.5, &k1}}));
      const Vec k3 = prob.rhs(axpy(y, h, {{0.5, &k2}}));
      const Vec k4 = prob.rhs(axpy(y, h, {{1.0, &k3}}));
      y = axpy(y, h, {{1.0 / 6, &k1}, {1.0 / 3, &k2}, {1.0 / 3, &k3}, {1.0 / 6, &k4}});
    } catch (const SingularMatrixError& e) {
      throw SingularMatrixError(std::string(e.what()) + "; integration halted" + where(t, y, n), e.det());
    } catch (const DomainError& e) {
      throw IntegrationError(std::string(e.what()) + "; integration halted" + where(t, y, n));
    }
    t = t_next;
    rec.record(t, prob.state(y));
  }
}

// Dormand–Prince 5(4), first-same-as-last.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double scaled_max(const Vec& x, const Vec& y, const IntegrateOptions& o) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i]) / (o.atol + o.rtol * std::fabs(y[i])));
  return m;
}

double initial_step(const Problem& prob, const Vec& y, const Vec& f0, const IntegrateOptions& o) {
  const double d0 = scaled_max(y, y, o);
  const double d1 = scaled_max(f0, y, o);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, o.t_end);
  double h1 = h0;
  try {
    const Vec f1 = prob.rhs(axpy(y, h0, {{1.0, &f0}}));
    Vec diff(f1.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = f1[i] - f0[i];
    const double d2 = scaled_max(diff, y, o) / h0;
    const double dm = std::max(d1, d2);
    h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5);
  } catch (const NumericError&) {
  }
  return std::min({100 * h0, h1, o.t_end});
}

void run_rk45(const Problem& prob, Vec y, const IntegrateOptions& opts, Recorder& rec, std::size_t n) {
  if (!(opts.rtol >= 0.0) || !(opts.atol >= 0.0) || opts.rtol + opts.atol <= 0.0)
    throw InputError("rk45 needs nonnegative tolerances, not both zero");
  double t = 0.0;
  Vec k1;
  try {
    k1 = prob.rhs(y);
  } catch (const SingularMatrixError& e) {
    throw SingularMatrixError(std::string(e.what()) + "; integration halted" + where(t, y, n), e.det());
  } catch (const DomainError& e) {
    throw IntegrationError(std::string(e.what()) + "; integration halted" + where(t, y, n));
  }
  double h = initial_step(prob, y, k1, opts);
  std::size_t steps = 0;
  std::size_t rejections = 0;
  std::string last_failure;

  while (t < opts.t_end) {
    if (steps++ >= opts.max_steps) throw IntegrationError("exceeded max_steps" + where(t, y, n));
    bool last = false;
    if (t + h >= opts.t_end || opts.t_end - (t + h) < 1e-12 * std::max(1.0, std::fabs(opts.t_end))) {
      h = opts.t_end - t;
      last = true;
    }
    if (h <= 1e-14 * std::max(1.0, std::fabs(t)))
      throw IntegrationError("step size underflow" + where(t, y, n) +
                             (last_failure.empty() ? "" : " (" + last_failure + ")"));

    Vec y_new, k7, err;
    bool ok = true;
    try {
      const Vec k2 = prob.rhs(axpy(y, h, {{a21, &k1}}));
      const Vec k3 = prob.rhs(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
      const Vec k4 = prob.rhs(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
      const Vec k5 = prob.rhs(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
      const Vec k6 = prob.rhs(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
      y_new = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
      k7 = prob.rhs(y_new);
      err.assign(y.size(), 0.0);
      for (std::size_t i = 0; i < y.size(); ++i)
        err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    } catch (const SingularMatrixError& e) {
      throw SingularMatrixError(std::string(e.what()) + "; integration halted" + where(t, y, n), e.det());
    } catch (const DomainError& e) {
      ok = false;
      last_failure = e.what();
    }

    double enorm = 0.0;
    if (ok) {
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double sc = opts.atol + opts.rtol * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
        enorm = std::max(enorm, std::fabs(err[i]) / sc);
      }
      if (!std::isfinite(enorm)) ok = false;
    }
    if (!ok || enorm > 1.0) {
      if (++rejections > opts.max_rejections)
        throw IntegrationError("too many consecutive step rejections" + where(t, y, n) +
                               (last_failure.empty() ? "" : " (" + last_failure + ")"));
      h *= ok ? std::max(0.2, 0.9 * std::pow(enorm, -0.2)) : 0.25;
      continue;
    }
    rejections = 0;
    t = last ? opts.t_end : t + h;
    y = std::move(y_new);
    k1 = std::move(k7);
    rec.record(t, prob.state(y));
    const double fac = enorm == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(enorm, -0.2)));
    h *= fac;
  }
}

}  // namespace

const std::vector<double>& Trajectory::monitor(const std::string& name) const {
  const auto it = std::find(monitor_names.begin(), monitor_names.end(), name);
  if (it == monitor_names.end()) throw InputError("trajectory has no monitor '" + name + "'");
  return monitors[static_cast<std::size_t>(it - monitor_names.begin())];
}

Trajectory integrate(const SystemDef& sys, Dynamics dynamics, const VakState& s0, const IntegrateOptions& opts) {
  if (dynamics == Dynamics::vak)
    sys.check(s0);
  else
    sys.check(NhState{s0.q, s0.v});
  if (!(opts.t_end > 0.0) || !std::isfinite(opts.t_end)) throw InputError("t_end must be positive and finite");

  const Problem prob(sys, dynamics);
  Trajectory traj;
  traj.dynamics = dynamics;
  Recorder rec(sys, dynamics, opts.candidates, traj);
  VakState start = s0;
  if (dynamics == Dynamics::nh) start.p.clear();
  const Vec y0 = prob.flatten(start);
  try {
    rec.record(0.0, start);
  } catch (const SingularMatrixError& e) {
    throw SingularMatrixError(std::string(e.what()) + "; integration halted" + where(0.0, y0, sys.n()), e.det());
  } catch (const DomainError& e) {
    throw IntegrationError(std::string(e.what()) + where(0.0, y0, sys.n()));
  }
  if (opts.method == Method::rk4)
    run_rk4(prob, y0, opts, rec, sys.n());
  else
    run_rk45(prob, y0, opts, rec, sys.n());
  return traj;
}

Trajectory integrate_vak(const SystemDef& sys, const VakState& s0, const IntegrateOptions& opts) {
  return integrate(sys, Dynamics::vak, s0, opts);
}

Trajectory integrate_nh(const SystemDef& sys, const NhState& s0, const IntegrateOptions& opts) {
  return integrate(sys, Dynamics::nh, VakState{s0.q, s0.v, {}}, opts);
}

DriftReport drift_report(const SystemDef&, const Trajectory& traj) {
  DriftReport r;
  r.quantity = traj.dynamics == Dynamics::vak ? "H" : "E_L";
  if (traj.times.empty()) return r;
  const auto& q = traj.monitor(r.quantity);
  for (double x : q) {
    r.drift.push_back(std::fabs(x - q.front()));
    r.max_drift = std::max(r.max_drift, r.drift.back());
  }
  for (std::size_t i = 0; i < traj.monitor_names.size(); ++i) {
    const auto& name = traj.monitor_names[i];
    if (name.rfind("G_", 0) != 0) continue;
    const std::string base = name.back() == ']' ? name.substr(2, name.rfind('[') - 2) : name.substr(2);
    auto& series = r.candidates[base];
    double& m = r.candidate_max_abs[base];
    // indexed entries: keep the worst one per sample
    if (series.empty()) series.assign(traj.times.size(), 0.0);
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
      const double g = traj.monitors[i][j];
      if (std::fabs(g) >= std::fabs(series[j])) series[j] = g;
      m = std::max(m, std::fabs(g));
    }
  }
  return r;
}

namespace {

void put(std::ostream& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out << buf;
}

}  // namespace

void write_csv(std::ostream& out, const SystemDef& sys, const Trajectory& traj) {
  out << 't';
  for (const auto& c : sys.coords()) out << ',' << c;
  for (const auto& b : sys.base()) out << ',' << velocity_name(b);
  if (traj.dynamics == Dynamics::vak)
    for (const auto& d : sys.dependent()) out << ',' << multiplier_name(d);
  for (const auto& m : traj.monitor_names) out << ',' << m;
  out << '\n';
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    put(out, traj.times[i]);
    const auto& s = traj.states[i];
    for (double x : s.q) out << ',', put(out, x);
    for (double x : s.v) out << ',', put(out, x);
    if (traj.dynamics == Dynamics::vak)
      for (double x : s.p) out << ',', put(out, x);
    for (const auto& m : traj.monitors) out << ',', put(out, m[i]);
    out << '\n';
  }
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty CSV");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double x = 0.0;
      const char* b = cell.data();
      const char* e = b + cell.size();
      const auto r = std::from_chars(b, e, x);
      if (r.ec != std::errc() || r.ptr != e)
        throw InputError("CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      row.push_back(x);
    }
    if (row.size() != t.header.size())
      throw InputError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " fields");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace vaknh
