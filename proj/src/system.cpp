#include "vaknh/system.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace vaknh {

namespace {

constexpr std::size_t kLoadLinearitySamples = 16;
constexpr std::uint64_t kLoadLinearitySeed = 0x5eed;
constexpr double kLinearityTol = 1e-12;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& xs, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

}  // namespace

SystemDef::SystemDef(std::string name, std::vector<std::string> coords, std::vector<std::string> dependent,
                     expr::Expression lagrangian, std::map<std::string, expr::Expression> psi, bool declared_linear,
                     Params params)
    : name_(std::move(name)),
      coords_(std::move(coords)),
      params_(std::move(params)),
      lagrangian_(std::move(lagrangian)),
      declared_linear_(declared_linear) {
  if (coords_.empty()) throw SystemFormatError(0, "no coordinates declared");
  std::set<std::string> names;
  for (const auto& c : coords_) {
    if (!expr::is_identifier(c)) throw SystemFormatError(0, "invalid coordinate name '" + c + "'");
    if (expr::is_function_name(c)) throw SystemFormatError(0, "coordinate name '" + c + "' is a function name");
    if (!names.insert(c).second) throw SystemFormatError(0, "duplicate coordinate '" + c + "'");
  }
  const std::set<std::string> dep_set(dependent.begin(), dependent.end());
  if (dep_set.size() != dependent.size()) throw SystemFormatError(0, "duplicate dependent coordinate");
  for (const auto& d : dependent)
    if (!names.count(d)) throw SystemFormatError(0, "dependent coordinate '" + d + "' is not a coordinate");
  if (dependent.empty() || dependent.size() >= coords_.size())
    throw SystemFormatError(0, "need 1 <= m < n dependent coordinates, got m = " + std::to_string(dependent.size()) +
                                   ", n = " + std::to_string(coords_.size()));

  for (std::size_t A = 0; A < coords_.size(); ++A) {
    if (dep_set.count(coords_[A])) {
      dependent_.push_back(coords_[A]);
      dependent_index_.push_back(A);
    } else {
      base_.push_back(coords_[A]);
      base_index_.push_back(A);
    }
  }

  for (const auto& c : coords_) ambient_slots_.push_back(c);
  for (const auto& c : coords_) ambient_slots_.push_back(velocity_name(c));

  std::set<std::string> taken(ambient_slots_.begin(), ambient_slots_.end());
  if (taken.size() != ambient_slots_.size())
    throw SystemFormatError(0, "a coordinate name collides with a velocity name");
  for (const auto& d : dependent_)
    if (!taken.insert(multiplier_name(d)).second)
      throw SystemFormatError(0, "multiplier name '" + multiplier_name(d) + "' collides with a coordinate");
  for (const auto& [p, value] : params_) {
    if (!expr::is_identifier(p)) throw SystemFormatError(0, "invalid parameter name '" + p + "'");
    if (!taken.insert(p).second) throw SystemFormatError(0, "parameter '" + p + "' collides with another name");
  }

  const auto pmap = param_map();
  std::set<std::string> lag_allowed(ambient_slots_.begin(), ambient_slots_.end());
  for (const auto& [p, value] : params_) lag_allowed.insert(p);
  for (const auto& v : expr::free_vars(lagrangian_))
    if (!lag_allowed.count(v)) throw InputError("unknown variable '" + v + "' in lagrangian");

  for (const auto& d : dependent_) {
    auto it = psi.find(d);
    if (it == psi.end()) throw SystemFormatError(0, "missing psi for dependent coordinate '" + d + "'");
    for (const auto& v : expr::free_vars(it->second)) {
      if (dep_set.count(v.size() > 1 ? v.substr(1) : std::string()) && v[0] == 'd' && lag_allowed.count(v))
        throw AdmissibilityError(d, "admissibility violation: psi " + d + " contains dependent velocity '" + v + "'");
      if (!lag_allowed.count(v)) throw InputError("unknown variable '" + v + "' in psi " + d);
    }
    psi_.push_back(it->second);
  }
  for (const auto& [key, e] : psi)
    if (!dep_set.count(key)) throw SystemFormatError(0, "psi given for non-dependent coordinate '" + key + "'");

  lagrangian_program_ = expr::Program::compile(lagrangian_, ambient_slots_, pmap);
  for (const auto& e : psi_) psi_programs_.push_back(expr::Program::compile(e, ambient_slots_, pmap));

  LinearityReport rep;
  try {
    rep = verify_linearity(*this, kLoadLinearitySamples, kLoadLinearitySeed);
  } catch (const DomainError&) {
    if (declared_linear_) throw;
    rep.linear = false;
  }
  verified_linear_ = rep.linear;
  if (declared_linear_ && !rep.linear)
    throw LinearityError("system '" + name_ + "' is declared linear but " + rep.reason);
}

std::vector<std::string> SystemDef::state_slots() const {
  std::vector<std::string> s = ambient_slots_;
  for (const auto& d : dependent_) s.push_back(multiplier_name(d));
  return s;
}

expr::Program SystemDef::bind(const expr::Expression& e, std::span<const std::string> slots) const {
  return expr::Program::compile(e, slots, param_map());
}

void SystemDef::check(const NhState& s) const {
  if (s.q.size() != n() || s.v.size() != k())
    throw InputError("state has " + std::to_string(s.q.size()) + " positions and " + std::to_string(s.v.size()) +
                     " velocities; system '" + name_ + "' needs " + std::to_string(n()) + " and " +
                     std::to_string(k()));
}

void SystemDef::check(const VakState& s) const {
  check(NhState{s.q, s.v});
  if (s.p.size() != m())
    throw InputError("state has " + std::to_string(s.p.size()) + " multipliers; system '" + name_ + "' needs " +
                     std::to_string(m()));
}

bool operator==(const SystemDef& a, const SystemDef& b) {
  return a.name_ == b.name_ && a.coords_ == b.coords_ && a.dependent_ == b.dependent_ && a.params_ == b.params_ &&
         a.lagrangian_ == b.lagrangian_ && a.psi_ == b.psi_ && a.declared_linear_ == b.declared_linear_;
}

// ---------------------------------------------------------------------------

SystemDef load_system(std::string_view source) {
  std::optional<std::string> name;
  std::optional<std::vector<std::string>> coords;
  std::optional<std::vector<std::string>> dependent;
  std::optional<expr::Expression> lagrangian;
  std::map<std::string, expr::Expression> psi;
  std::optional<bool> linear;
  SystemDef::Params params;

  auto parse_expr = [](std::string_view text, std::size_t line) {
    try {
      return expr::parse(text);
    } catch (const expr::ParseError& e) {
      throw SystemFormatError(line, e.what());
    }
  };
  auto split_assignment = [](std::string_view rest, std::size_t line) {
    const auto eq = rest.find('=');
    if (eq == std::string_view::npos) throw SystemFormatError(line, "expected '<id> = <value>'");
    const std::string id(trim(rest.substr(0, eq)));
    if (!expr::is_identifier(id)) throw SystemFormatError(line, "invalid identifier '" + id + "'");
    return std::pair{id, trim(rest.substr(eq + 1))};
  };

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    const auto nl = source.find('\n', pos);
    std::string_view line = source.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? source.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto sp = line.find_first_of(" \t");
    const std::string_view key = line.substr(0, sp);
    const std::string_view rest = sp == std::string_view::npos ? std::string_view{} : trim(line.substr(sp));

    auto once = [&](bool seen) {
      if (seen) throw SystemFormatError(lineno, "duplicate '" + std::string(key) + "' directive");
    };
    if (key == "name") {
      once(name.has_value());
      if (rest.empty()) throw SystemFormatError(lineno, "empty name");
      name = std::string(rest);
    } else if (key == "coords") {
      once(coords.has_value());
      coords = split_ws(rest);
      if (coords->empty()) throw SystemFormatError(lineno, "no coordinates listed");
      for (const auto& c : *coords)
        if (!expr::is_identifier(c)) throw SystemFormatError(lineno, "invalid coordinate name '" + c + "'");
    } else if (key == "dependent") {
      once(dependent.has_value());
      dependent = split_ws(rest);
    } else if (key == "lagrangian") {
      once(lagrangian.has_value());
      lagrangian = parse_expr(rest, lineno);
    } else if (key == "psi") {
      auto [id, text] = split_assignment(rest, lineno);
      if (psi.count(id)) throw SystemFormatError(lineno, "duplicate psi for '" + id + "'");
      psi.emplace(id, parse_expr(text, lineno));
    } else if (key == "param") {
      auto [id, text] = split_assignment(rest, lineno);
      for (const auto& [p, v] : params)
        if (p == id) throw SystemFormatError(lineno, "duplicate param '" + id + "'");
      double value = 0.0;
      const std::string t(text);
      const auto r = std::from_chars(t.data(), t.data() + t.size(), value);
      if (r.ec != std::errc() || r.ptr != t.data() + t.size())
        throw SystemFormatError(lineno, "param value '" + t + "' is not a number");
      params.emplace_back(id, value);
    } else if (key == "linear") {
      once(linear.has_value());
      if (rest == "true")
        linear = true;
      else if (rest == "false")
        linear = false;
      else
        throw SystemFormatError(lineno, "expected 'linear true' or 'linear false'");
    } else {
      throw SystemFormatError(lineno, "unknown directive '" + std::string(key) + "'");
    }
  }
  if (!coords) throw SystemFormatError(0, "missing 'coords' directive");
  if (!dependent) throw SystemFormatError(0, "missing 'dependent' directive");
  if (!lagrangian) throw SystemFormatError(0, "missing 'lagrangian' directive");
  return SystemDef(name.value_or("unnamed"), *coords, *dependent, *lagrangian, std::move(psi), linear.value_or(false),
                   std::move(params));
}

SystemDef load_system_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open system file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_system(ss.str());
}

std::string serialize(const SystemDef& sys) {
  std::ostringstream out;
  out << "name " << sys.name() << '\n';
  out << "coords " << join(sys.coords(), " ") << '\n';
  out << "dependent " << join(sys.dependent(), " ") << '\n';
  for (const auto& [p, v] : sys.params()) out << "param " << p << " = " << format_double(v) << '\n';
  out << "lagrangian " << expr::serialize(sys.lagrangian()) << '\n';
  for (std::size_t al = 0; al < sys.m(); ++al)
    out << "psi " << sys.dependent()[al] << " = " << expr::serialize(sys.psi(al)) << '\n';
  out << "linear " << (sys.declared_linear() ? "true" : "false") << '\n';
  return out.str();
}

SystemDef with_params(const SystemDef& sys, const std::map<std::string, double>& overrides) {
  SystemDef::Params params = sys.params();
  for (const auto& [name, value] : overrides) {
    auto it = std::find_if(params.begin(), params.end(), [&](const auto& p) { return p.first == name; });
    if (it == params.end()) throw InputError("system '" + sys.name() + "' has no parameter '" + name + "'");
    it->second = value;
  }
  std::map<std::string, expr::Expression> psi;
  for (std::size_t al = 0; al < sys.m(); ++al) psi.emplace(sys.dependent()[al], sys.psi(al));
  return SystemDef(sys.name(), sys.coords(), sys.dependent(), sys.lagrangian(), std::move(psi),
                   sys.declared_linear(), std::move(params));
}

std::vector<double> complete_velocities(const SystemDef& sys, const NhState& s) {
  sys.check(s);
  const auto slots = sys.complete<double>(s.q, s.v);
  return {slots.begin() + static_cast<std::ptrdiff_t>(sys.n()), slots.end()};
}

double restricted_lagrangian(const SystemDef& sys, const NhState& s) {
  sys.check(s);
  const auto slots = sys.complete<double>(s.q, s.v);
  return sys.eval_lagrangian<double>(slots);
}

std::vector<double> velocity_gradient(const SystemDef& sys, const NhState& s) {
  sys.check(s);
  const auto slots = sys.complete<double>(s.q, s.v);
  const std::size_t n = sys.n();
  std::vector<HyperDual> hd(slots.begin(), slots.end());
  std::vector<double> out(n);
  for (std::size_t A = 0; A < n; ++A) {
    hd[n + A].d1 = 1.0;
    out[A] = sys.eval_lagrangian<HyperDual>(hd).d1;
    hd[n + A].d1 = 0.0;
  }
  return out;
}

LinearityReport verify_linearity(const SystemDef& sys, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw InputError("verify_linearity needs at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> qdist(0.25, 1.75);
  std::uniform_real_distribution<double> vdist(-0.5, 0.5);
  const std::size_t n = sys.n();
  const std::size_t k = sys.k();

  for (std::size_t s = 0; s < samples; ++s) {
    for (int attempt = 0;; ++attempt) {
      NhState st{std::vector<double>(n), std::vector<double>(k)};
      for (auto& x : st.q) x = qdist(rng);
      for (auto& x : st.v) x = vdist(rng);
      try {
        const RestrictedJets j = restricted_jets(sys, st.q, st.v, false);
        for (std::size_t al = 0; al < sys.m(); ++al)
          for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
              if (std::fabs(j.psi[al].hess(n + a, n + b)) > kLinearityTol) {
                return {false, st,
                        "psi " + sys.dependent()[al] + " has nonzero second velocity derivative d^2/d" +
                            velocity_name(sys.base()[a]) + "d" + velocity_name(sys.base()[b])};
              }
        std::vector<double> zero(k, 0.0);
        const auto slots = sys.complete<double>(st.q, zero);
        for (std::size_t al = 0; al < sys.m(); ++al) {
          const double at_rest = slots[n + sys.dependent_index(al)];
          if (std::fabs(at_rest) > kLinearityTol)
            return {false, NhState{st.q, zero}, "psi " + sys.dependent()[al] + " does not vanish at zero velocity"};
        }
        break;
      } catch (const DomainError&) {
        if (attempt + 1 >= 10) throw;
      }
    }
  }
  return {true, std::nullopt, {}};
}

RestrictedJets restricted_jets(const SystemDef& sys, std::span<const double> q, std::span<const double> v,
                               bool with_lagrangian) {
  const std::size_t n = sys.n();
  const std::size_t k = sys.k();
  const std::size_t m = sys.m();
  std::vector<double> x(q.begin(), q.end());
  x.insert(x.end(), v.begin(), v.end());

  auto f = [&](std::span<const HyperDual> in) {
    const auto slots = sys.complete<HyperDual>(in.subspan(0, n), in.subspan(n, k));
    std::vector<HyperDual> out;
    out.reserve(m + 1);
    for (std::size_t al = 0; al < m; ++al) out.push_back(slots[n + sys.dependent_index(al)]);
    if (with_lagrangian) out.push_back(sys.eval_lagrangian<HyperDual>(slots));
    return out;
  };
  auto need = [n](std::size_t i, std::size_t j) { return i >= n || j >= n; };
  auto js = ad::jets(f, x, with_lagrangian ? m + 1 : m, need);

  RestrictedJets out;
  if (with_lagrangian) {
    out.lagrangian = std::move(js.back());
    js.pop_back();
  }
  out.psi = std::move(js);
  return out;
}

}  // namespace vaknh
