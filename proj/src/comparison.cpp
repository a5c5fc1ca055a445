#include "vaknh/comparison.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include <json.hpp>

#include "vaknh/autodiff.hpp"

namespace vaknh {

namespace {

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

void require_linear(const SystemDef& sys, const char* what) {
  if (!sys.verified_linear())
    throw LinearityError(std::string(what) + " requires constraints linear in the velocities; '" + sys.name() +
                     "' is not");
}

}  // namespace

double Curvature::max_abs() const { return vaknh::max_abs(data_); }

Curvature curvature(const SystemDef& sys, std::span<const double> q) {
  require_linear(sys, "curvature");
  if (q.size() != sys.n()) throw InputError("curvature: expected " + std::to_string(sys.n()) + " positions");
  const std::size_t n = sys.n();
  const std::size_t k = sys.k();
  const std::size_t m = sys.m();
  const std::vector<double> v(k, 0.0);
  const RestrictedJets j = restricted_jets(sys, q, v, false);
  // ∂Ψ^α_b/∂q^B and Ψ^β_a
  auto d = [&](std::size_t al, std::size_t B, std::size_t b) { return j.psi[al].hess(B, n + b); };
  auto dpsi = [&](std::size_t be, std::size_t a) { return j.psi[be].grad[n + a]; };

  Curvature R(m, k);
  for (std::size_t al = 0; al < m; ++al) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        if (a == b) continue;
        const double t1 = d(al, sys.base_index(a), b);
        const double t2 = d(al, sys.base_index(b), a);
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t be = 0; be < m; ++be) {
          s1 += dpsi(be, a) * d(al, sys.dependent_index(be), b);
          s2 += dpsi(be, b) * d(al, sys.dependent_index(be), a);
        }
        R(al, a, b) = (t1 - t2) + (s1 - s2);
      }
    }
  }
  return R;
}

std::vector<double> g_residuals(const SystemDef& sys, const VakState& s) {
  require_linear(sys, "g residuals");
  sys.check(s);
  const Curvature R = curvature(sys, s.q);
  const auto pi = dependent_momenta(sys, NhState{s.q, s.v});
  std::vector<double> delta(sys.m());
  for (std::size_t al = 0; al < sys.m(); ++al) delta[al] = s.p[al] - pi[al];
  std::vector<double> g(sys.k(), 0.0);
  for (std::size_t b = 0; b < sys.k(); ++b) {
    double x = 0.0;
    for (std::size_t a = 0; a < sys.k(); ++a)
      for (std::size_t al = 0; al < sys.m(); ++al) x += s.v[a] * delta[al] * R(al, a, b);
    g[b] = x;
  }
  return g;
}

std::vector<double> field_residual(const SystemDef& sys, const VakState& s) {
  const auto vk = vak_rhs(sys, s);
  const auto nh = nh_rhs(sys, NhState{s.q, s.v});
  std::vector<double> d(sys.k());
  for (std::size_t a = 0; a < sys.k(); ++a) d[a] = vk.dv[a] - nh.dv[a];
  return d;
}

std::vector<double> el_residual(const SystemDef& sys, const NhState& s, const NhDerivative& accel) {
  return euler_lagrange(sys, s, accel.dv);
}

// ---------------------------------------------------------------------------

std::vector<Candidate> parse_candidates(std::string_view text) {
  std::vector<Candidate> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SystemFormatError(lineno, "expected 'name = expression'");
    std::string name = line.substr(0, eq);
    name.erase(0, name.find_first_not_of(" \t"));
    name.erase(name.find_last_not_of(" \t\r") + 1);
    if (!expr::is_identifier(name)) throw SystemFormatError(lineno, "invalid candidate name '" + name + "'");
    try {
      out.push_back({name, expr::parse(line.substr(eq + 1))});
    } catch (const expr::ParseError& e) {
      throw SystemFormatError(lineno, e.what());
    }
  }
  return out;
}

double Tangency::max_abs_value() const { return max_abs(values); }
double Tangency::max_abs_residual() const { return max_abs(residuals); }

CandidateSet::CandidateSet(const SystemDef& sys, const std::vector<Candidate>& candidates) {
  const auto slots = sys.state_slots();
  for (const auto& c : candidates) {
    try {
      entries_.push_back(sys.bind(c.g, slots));
    } catch (const UnboundVariableError& e) {
      throw InputError("candidate '" + c.name + "': " + e.what());
    }
    entry_names_.push_back(c.name);
    if (std::find(names_.begin(), names_.end(), c.name) == names_.end()) names_.push_back(c.name);
  }
}

namespace {

std::vector<HyperDual> candidate_slots(const SystemDef& sys, std::span<const HyperDual> x) {
  const std::size_t n = sys.n();
  const std::size_t k = sys.k();
  auto slots = sys.complete<HyperDual>(x.subspan(0, n), x.subspan(n, k));
  slots.insert(slots.end(), x.begin() + static_cast<std::ptrdiff_t>(n + k), x.end());
  return slots;
}

}  // namespace

std::map<std::string, Tangency> CandidateSet::tangency(const SystemDef& sys, const VakState& s,
                                                       const VakDerivative& field) const {
  sys.check(s);
  std::vector<double> x(s.q);
  x.insert(x.end(), s.v.begin(), s.v.end());
  x.insert(x.end(), s.p.begin(), s.p.end());
  std::vector<double> dir(field.dq);
  dir.insert(dir.end(), field.dv.begin(), field.dv.end());
  dir.insert(dir.end(), field.dp.begin(), field.dp.end());

  std::vector<HyperDual> in(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) in[i] = HyperDual(x[i], dir[i], 0.0, 0.0);
  const auto slots = candidate_slots(sys, in);

  std::map<std::string, Tangency> out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const HyperDual g = entries_[i].run<HyperDual>(slots);
    auto& t = out[entry_names_[i]];
    t.values.push_back(g.value);
    t.residuals.push_back(g.d1);
  }
  return out;
}

std::vector<double> CandidateSet::values(const SystemDef& sys, const VakState& s) const {
  sys.check(s);
  auto slots = sys.complete<double>(s.q, s.v);
  slots.insert(slots.end(), s.p.begin(), s.p.end());
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.run<double>(slots));
  return out;
}

std::map<std::string, Tangency> tangency_residuals(const SystemDef& sys, const std::vector<Candidate>& candidates,
                                                   const VakState& s) {
  const CandidateSet set(sys, candidates);
  return set.tangency(sys, s, vak_rhs(sys, s));
}

// ---------------------------------------------------------------------------

ComparisonRecord compare_state(const SystemDef& sys, const VakState& s, const CandidateSet& candidates) {
  sys.check(s);
  ComparisonRecord r;
  r.state = s;
  if (sys.verified_linear()) r.g = g_residuals(sys, s);
  const auto vk = vak_rhs(sys, s);
  const auto nh = nh_rhs(sys, NhState{s.q, s.v});
  r.delta_y.resize(sys.k());
  for (std::size_t a = 0; a < sys.k(); ++a) r.delta_y[a] = vk.dv[a] - nh.dv[a];
  if (!candidates.empty()) r.tangency = candidates.tangency(sys, s, vk);
  return r;
}

ComparisonSummary summarize(const std::vector<ComparisonRecord>& records, double tol, std::uint64_t seed) {
  ComparisonSummary s;
  s.samples = records.size();
  s.tol = tol;
  s.seed = seed;
  std::size_t g_zero = 0;
  std::size_t dy_zero = 0;
  bool all_g = true;
  for (const auto& r : records) {
    if (r.skipped) {
      ++s.skipped;
      continue;
    }
    ++s.evaluated;
    if (r.g) {
      if (max_abs(*r.g) < tol) ++g_zero;
    } else {
      all_g = false;
    }
    if (max_abs(r.delta_y) < tol) ++dy_zero;
  }
  const double denom = s.evaluated ? static_cast<double>(s.evaluated) : 1.0;
  if (all_g && s.evaluated) s.fraction_g_zero = static_cast<double>(g_zero) / denom;
  s.fraction_delta_y_zero = static_cast<double>(dy_zero) / denom;
  return s;
}

namespace {

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("VAKNH_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

}  // namespace

ComparisonReport scan(const SystemDef& sys, const ScanOptions& opts, const std::vector<Candidate>& candidates) {
  std::vector<std::string> sampled;  // q, d<base>, p_<dep>
  for (const auto& c : sys.coords()) sampled.push_back(c);
  for (const auto& b : sys.base()) sampled.push_back(velocity_name(b));
  for (const auto& d : sys.dependent()) sampled.push_back(multiplier_name(d));
  for (const auto& [name, range] : opts.bounds) {
    if (std::find(sampled.begin(), sampled.end(), name) == sampled.end())
      throw InputError("bounds given for unknown state variable '" + name + "'");
    if (!(range.first <= range.second) || !std::isfinite(range.first) || !std::isfinite(range.second))
      throw InputError("invalid bounds for '" + name + "'");
  }
  if (opts.count == 0) throw InputError("scan needs at least one sample");
  std::vector<std::pair<double, double>> box;
  for (const auto& name : sampled) {
    auto it = opts.bounds.find(name);
    box.push_back(it == opts.bounds.end() ? std::pair{-1.0, 1.0} : it->second);
  }

  const CandidateSet cset(sys, candidates);
  ComparisonReport report;
  report.system = sys.name();
  report.records.resize(opts.count);

  auto run_one = [&](std::size_t i) {
    std::mt19937_64 rng(opts.seed + i);
    std::vector<double> x(sampled.size());
    for (std::size_t j = 0; j < x.size(); ++j)
      x[j] = std::uniform_real_distribution<double>(box[j].first, box[j].second)(rng);
    const std::size_t n = sys.n();
    const std::size_t k = sys.k();
    VakState s{{x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n)},
               {x.begin() + static_cast<std::ptrdiff_t>(n), x.begin() + static_cast<std::ptrdiff_t>(n + k)},
               {x.begin() + static_cast<std::ptrdiff_t>(n + k), x.end()}};
    ComparisonRecord& r = report.records[i];
    try {
      if (opts.p_mode == PMode::legendre) s.p = dependent_momenta(sys, NhState{s.q, s.v});
      r = compare_state(sys, s, cset);
    } catch (const Error& e) {
      r = ComparisonRecord{};
      r.state = s;
      r.skipped = e.what();
    }
    r.index = i;
  };

  const std::size_t workers = worker_count(opts.threads, opts.count);
  if (workers == 1) {
    for (std::size_t i = 0; i < opts.count; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        try {
          for (std::size_t i = next++; i < opts.count; i = next++) run_one(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  report.summary = summarize(report.records, opts.tol, opts.seed);
  return report;
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json record_json(const ComparisonRecord& r) {
  json j;
  j["index"] = r.index;
  j["state"] = {{"q", r.state.q}, {"v", r.state.v}, {"p", r.state.p}};
  if (r.skipped) {
    j["skipped"] = *r.skipped;
    return j;
  }
  j["g"] = r.g ? json(*r.g) : json(nullptr);
  j["deltaY"] = r.delta_y;
  json t = json::object();
  for (const auto& [name, tg] : r.tangency)
    t[name] = {{"values", tg.values}, {"residuals", tg.residuals}, {"max_abs_residual", tg.max_abs_residual()}};
  j["tangency"] = t;
  return j;
}

json layout_json(const SystemDef& sys) {
  std::vector<std::string> p;
  for (const auto& d : sys.dependent()) p.push_back(multiplier_name(d));
  std::vector<std::string> v;
  for (const auto& b : sys.base()) v.push_back(velocity_name(b));
  return {{"q", sys.coords()}, {"v", v}, {"p", p}};
}

}  // namespace

std::string to_json(const ComparisonRecord& r, const SystemDef& sys) {
  json j = record_json(r);
  j["system"] = sys.name();
  j["layout"] = layout_json(sys);
  return j.dump(2);
}

std::string to_json(const ComparisonReport& r, const SystemDef& sys) {
  json j;
  j["system"] = r.system;
  j["layout"] = layout_json(sys);
  json recs = json::array();
  for (const auto& rec : r.records) recs.push_back(record_json(rec));
  j["records"] = std::move(recs);
  const auto& s = r.summary;
  j["summary"] = {{"samples", s.samples},
                  {"evaluated", s.evaluated},
                  {"skipped", s.skipped},
                  {"fraction_g_zero", s.fraction_g_zero ? json(*s.fraction_g_zero) : json(nullptr)},
                  {"fraction_delta_y_zero", s.fraction_delta_y_zero},
                  {"tol", s.tol},
                  {"seed", s.seed}};
  return j.dump(2);
}

}  // namespace vaknh
