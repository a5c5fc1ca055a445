#include "vaknh/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "vaknh/comparison.hpp"
#include "vaknh/integrate.hpp"
#include "vaknh/models.hpp"
#include "vaknh/vakonomic.hpp"

namespace vaknh::cli {

namespace {

class UsageError : public InputError {
public:
  using InputError::InputError;
};

double parse_real(const std::string& text, const std::string& what) {
  double x = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  const auto r = std::from_chars(b, e, x);
  if (r.ec != std::errc() || r.ptr != e || text.empty())
    throw UsageError(what + ": '" + text + "' is not a number");
  return x;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_real(cell, what));
  if (text.back() == ',') throw UsageError(what + ": trailing comma");
  return out;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos) throw UsageError("--param expects name=value, got '" + it + "'");
    out[it.substr(0, eq)] = parse_real(it.substr(eq + 1), "--param " + it.substr(0, eq));
  }
  return out;
}

std::vector<Candidate> read_candidates(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw InputError("cannot open candidates file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_candidates(ss.str());
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const Matrix& m) {
  std::string s = "[";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    s += i ? ", [" : "[";
    for (std::size_t j = 0; j < m.cols(); ++j) s += (j ? ", " : "") + fmt(m(i, j));
    s += "]";
  }
  return s + "]";
}

class OutputFile {
public:
  OutputFile(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw InputError("cannot open output file '" + path + "'");
    stream_ = &file_;
  }
  std::ostream& get() { return *stream_; }
  void close() {
    if (file_.is_open()) {
      file_.close();
      if (!file_) throw InputError("writing the output file failed");
    }
  }

private:
  std::ofstream file_;
  std::ostream* stream_;
};

struct SystemArgs {
  std::string system;
  std::vector<std::string> params;

  void add(CLI::App* app) {
    app->add_option("system", system, "Path to a system file or a built-in model name")->required();
    app->add_option("--param", params, "Override a model parameter, name=value (repeatable)");
  }
  SystemDef load() const { return resolve_system(system, parse_params(params)); }
};

struct StateArgs {
  std::string q, v, p;
  CLI::Option* q_opt = nullptr;
  CLI::Option* v_opt = nullptr;
  CLI::Option* p_opt = nullptr;

  void add(CLI::App* app) {
    q_opt = app->add_option("--q", q, "Positions, comma separated, in coordinate order");
    v_opt = app->add_option("--v", v, "Base velocities, comma separated, in base order");
    p_opt = app->add_option("--p", p, "Multipliers p_<dependent>, comma separated");
  }
};

int do_check(const SystemArgs& sa, const StateArgs& st, std::ostream& out) {
  const SystemDef sys = sa.load();
  VakState s{std::vector<double>(sys.n(), 1.0), std::vector<double>(sys.k(), 0.5), std::vector<double>(sys.m(), 1.0)};
  if (st.q_opt->count()) s.q = parse_list(st.q, "--q");
  if (st.v_opt->count()) s.v = parse_list(st.v, "--v");
  if (st.p_opt->count()) s.p = parse_list(st.p, "--p");
  sys.check(s);

  bool pass = true;
  out << "system: " << sys.name() << " (n = " << sys.n() << ", m = " << sys.m() << ")\n";
  out << "admissibility: ok\n";
  out << "linearity: declared " << (sys.declared_linear() ? "true" : "false") << ", verified "
      << (sys.verified_linear() ? "true" : "false") << '\n';
  out << "probe: q = " << detail::format_vector(s.q) << ", v = " << detail::format_vector(s.v)
      << ", p = " << detail::format_vector(s.p) << '\n';
  const Matrix c = cbar(sys, s);
  const SymplecticReport sr = symplectic_check(sys, s);
  out << "cbar: " << fmt(c) << '\n';
  out << "symplectic: det = " << fmt(sr.det) << ", invertible = " << (sr.invertible ? "true" : "false") << '\n';
  if (!sr.invertible) pass = false;

  if (!sys.verified_linear()) {
    out << "compatibility: not applicable (constraints not linear in the velocities)\n";
  } else {
    try {
      const Compatibility comp = compatibility(sys, s.q);
      const double det = determinant(comp.c);
      const bool inv = numerically_invertible(comp.c, det);
      out << "compatibility: " << fmt(comp.c) << ", det = " << fmt(det)
          << ", compatible = " << (inv ? "true" : "false") << '\n';
      if (comp.velocity_dependent_hessian)
        out << "warning: the velocity Hessian of the Lagrangian depends on the velocities; evaluated at v = 0\n";
      if (!inv) pass = false;
    } catch (const SingularMatrixError& e) {
      out << "compatibility: not applicable (" << e.what() << ")\n";
    }
  }
  out << "result: " << (pass ? "pass" : "fail") << '\n';
  return pass ? ok : failed_check;
}

struct IntegrateArgs {
  std::string dynamics = "vak";
  std::string method = "rk45";
  double t_end = 1.0;
  double dt = 1e-3;
  double rtol = 1e-9;
  double atol = 1e-11;
  std::size_t max_steps = 10'000'000;
  std::string out;
  std::string candidates;
  CLI::Option* dt_opt = nullptr;
  CLI::Option* rtol_opt = nullptr;
  CLI::Option* atol_opt = nullptr;
};

int do_integrate(const SystemArgs& sa, const StateArgs& st, const IntegrateArgs& ia, std::ostream& out) {
  const Dynamics dyn = ia.dynamics == "vak" ? Dynamics::vak : Dynamics::nh;
  IntegrateOptions opts;
  opts.method = ia.method == "rk4" ? Method::rk4 : Method::rk45;
  if (opts.method == Method::rk4 && (ia.rtol_opt->count() || ia.atol_opt->count()))
    throw UsageError("--rtol/--atol apply to rk45 only");
  if (opts.method == Method::rk45 && ia.dt_opt->count()) throw UsageError("--dt applies to rk4 only");
  if (!st.q_opt->count() || !st.v_opt->count()) throw UsageError("integrate needs --q and --v");
  if (dyn == Dynamics::nh && st.p_opt->count()) throw UsageError("--p is meaningless for --dynamics nh");
  if (dyn == Dynamics::vak && !st.p_opt->count()) throw UsageError("--dynamics vak needs --p");
  opts.t_end = ia.t_end;
  opts.dt = ia.dt;
  opts.rtol = ia.rtol;
  opts.atol = ia.atol;
  opts.max_steps = ia.max_steps;

  const SystemDef sys = sa.load();
  opts.candidates = read_candidates(ia.candidates);
  VakState s0{parse_list(st.q, "--q"), parse_list(st.v, "--v"), parse_list(st.p, "--p")};
  const Trajectory traj = integrate(sys, dyn, s0, opts);
  OutputFile f(ia.out, out);
  write_csv(f.get(), sys, traj);
  f.close();
  return ok;
}

int do_compare(const SystemArgs& sa, const StateArgs& st, const std::string& cands, std::ostream& out) {
  if (!st.q_opt->count() || !st.v_opt->count() || !st.p_opt->count())
    throw UsageError("compare needs --q, --v and --p");
  const SystemDef sys = sa.load();
  const VakState s{parse_list(st.q, "--q"), parse_list(st.v, "--v"), parse_list(st.p, "--p")};
  const CandidateSet set(sys, read_candidates(cands));
  const ComparisonRecord r = compare_state(sys, s, set);
  out << to_json(r, sys) << '\n';
  return ok;
}

struct ScanArgs {
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  std::vector<std::string> bounds;
  std::string p_mode = "random";
  double tol = 1e-10;
  std::size_t threads = 0;
  std::string out;
  std::string candidates;
};

int do_scan(const SystemArgs& sa, const ScanArgs& sc, std::ostream& out) {
  ScanOptions opts;
  opts.count = sc.samples;
  opts.seed = sc.seed;
  opts.tol = sc.tol;
  opts.threads = sc.threads;
  opts.p_mode = sc.p_mode == "legendre" ? PMode::legendre : PMode::random;
  for (const auto& b : sc.bounds) {
    const auto eq = b.find('=');
    const auto colon = b.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos)
      throw UsageError("--bounds expects name=lo:hi, got '" + b + "'");
    const std::string name = b.substr(0, eq);
    if (opts.bounds.count(name)) throw UsageError("--bounds given twice for '" + name + "'");
    opts.bounds[name] = {parse_real(b.substr(eq + 1, colon - eq - 1), "--bounds " + name),
                         parse_real(b.substr(colon + 1), "--bounds " + name)};
  }
  if (opts.p_mode == PMode::legendre)
    for (const auto& [name, range] : opts.bounds)
      if (name.rfind("p_", 0) == 0) throw UsageError("--bounds on " + name + " conflicts with --p-mode legendre");

  const SystemDef sys = sa.load();
  const ComparisonReport rep = scan(sys, opts, read_candidates(sc.candidates));
  OutputFile f(sc.out, out);
  f.get() << to_json(rep, sys) << '\n';
  f.close();
  return ok;
}

int do_catalog(const std::string& name, std::ostream& out) {
  if (!name.empty()) {
    out << catalog_source(name);
    return ok;
  }
  for (const auto& n : catalog_names()) out << n << "  " << catalog_description(n) << '\n';
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vakonomic and nonholonomic dynamics of constrained Lagrangian systems", "vaknh"};
  app.require_subcommand(1);

  SystemArgs check_sys, int_sys, cmp_sys, scan_sys;
  StateArgs check_st, int_st, cmp_st;

  auto* check = app.add_subcommand("check", "Validate a system and test symplecticity at a probe state");
  check_sys.add(check);
  check_st.add(check);

  IntegrateArgs ia;
  auto* integ = app.add_subcommand("integrate", "Integrate vakonomic or nonholonomic dynamics to CSV");
  int_sys.add(integ);
  int_st.add(integ);
  integ->add_option("--dynamics", ia.dynamics, "vak or nh")->check(CLI::IsMember({"vak", "nh"}));
  integ->add_option("--method", ia.method, "rk4 or rk45")->check(CLI::IsMember({"rk4", "rk45"}));
  integ->add_option("--t-end", ia.t_end, "Final time")->check(CLI::PositiveNumber);
  ia.dt_opt = integ->add_option("--dt", ia.dt, "rk4 step")->check(CLI::PositiveNumber);
  ia.rtol_opt = integ->add_option("--rtol", ia.rtol, "rk45 relative tolerance")->check(CLI::NonNegativeNumber);
  ia.atol_opt = integ->add_option("--atol", ia.atol, "rk45 absolute tolerance")->check(CLI::NonNegativeNumber);
  integ->add_option("--max-steps", ia.max_steps, "Step limit");
  integ->add_option("--out", ia.out, "CSV output path (default: stdout)");
  integ->add_option("--candidates", ia.candidates, "File of 'name = expression' lines to monitor");

  std::string cmp_cands;
  auto* cmp = app.add_subcommand("compare", "Compare both vector fields at one state; prints JSON");
  cmp_sys.add(cmp);
  cmp_st.add(cmp);
  cmp->add_option("--candidates", cmp_cands, "File of 'name = expression' lines");
  double cmp_tol = 1e-10;
  cmp->add_option("--tol", cmp_tol, "Zero tolerance (recorded only)");

  ScanArgs sc;
  auto* scn = app.add_subcommand("scan", "Compare both vector fields over random states; writes JSON");
  scan_sys.add(scn);
  scn->add_option("--samples", sc.samples, "Number of states")->check(CLI::PositiveNumber);
  scn->add_option("--seed", sc.seed, "Base seed; sample i uses seed + i");
  scn->add_option("--bounds", sc.bounds, "Sampling box per variable, name=lo:hi (repeatable)");
  scn->add_option("--p-mode", sc.p_mode, "random or legendre")->check(CLI::IsMember({"random", "legendre"}));
  scn->add_option("--tol", sc.tol, "Zero tolerance")->check(CLI::NonNegativeNumber);
  scn->add_option("--threads", sc.threads, "Worker threads (0 = automatic)");
  scn->add_option("--out", sc.out, "JSON output path (default: stdout)");
  scn->add_option("--candidates", sc.candidates, "File of 'name = expression' lines");

  std::string cat_name;
  auto* cat = app.add_subcommand("catalog", "List built-in models, or print one");
  cat->add_option("name", cat_name, "Model to print");

  std::vector<const char*> argv{"vaknh"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try {
    if (check->parsed()) return do_check(check_sys, check_st, out);
    if (integ->parsed()) return do_integrate(int_sys, int_st, ia, out);
    if (cmp->parsed()) return do_compare(cmp_sys, cmp_st, cmp_cands, out);
    if (scn->parsed()) return do_scan(scan_sys, sc, out);
    if (cat->parsed()) return do_catalog(cat_name, out);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return numeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  }
  return usage;
}

}  // namespace vaknh::cli
