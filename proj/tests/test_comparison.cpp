#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vaknh/comparison.hpp"
#include "vaknh/maps.hpp"
#include "vaknh/models.hpp"

using namespace vaknh;
using nlohmann::json;

namespace {

// Particle loci. C11: straight lines along x on S; C12: along y with p_z = 0;
// C2: rest points.
const char* kParticleCandidates =
    "C11 = p_z - dz\n"
    "C11 = dy\n"
    "C12 = p_z - dz\n"
    "C12 = dx\n"
    "C2 = dx\n"
    "C2 = dy\n";

// The classical penny analysis writes its multipliers as P = 2*pi - p, where
// pi_alpha = dL/d(dq^alpha) and p is the engine's multiplier. In those
// coordinates C1 = {P_x sin(phi) - P_y cos(phi) = 0} and
// C12 = C1 and {2 dtheta = P_x cos(phi) + P_y sin(phi)}.
const char* kPennyCandidates =
    "C1 = (2*dx - p_x)*sin(phi) - (2*dy - p_y)*cos(phi)\n"
    "C12 = (2*dx - p_x)*sin(phi) - (2*dy - p_y)*cos(phi)\n"
    "C12 = 2*dtheta - (2*dx - p_x)*cos(phi) - (2*dy - p_y)*sin(phi)\n";

}  // namespace

TEST_CASE("curvature: examples") {
  const Curvature p = curvature(builtin("constrained_particle"), std::vector<double>{0.2, 1.3, -4});
  CHECK(p(0, 0, 1) == -1.0);
  CHECK(p(0, 1, 0) == 1.0);
  CHECK(p(0, 0, 0) == 0.0);
  CHECK(curvature(builtin("holonomic_demo"), std::vector<double>{1, 2, 3}).max_abs() == 0.0);
  const Curvature m = curvature(builtin("martinet"), std::vector<double>{0, 1.5, 0});
  CHECK(m(0, 0, 1) == -1.5);
  CHECK_THROWS_AS(curvature(builtin("von_neumann2"), std::vector<double>{1, 1}), LinearityError);
}

TEST_CASE("curvature is exactly antisymmetric") {
  std::mt19937_64 rng(1);
  for (const auto& name : testing::linear_models()) {
    const SystemDef sys = builtin(name);
    for (int i = 0; i < 100; ++i) {
      const Curvature r = curvature(sys, testing::uniform(rng, sys.n(), -2, 2));
      for (std::size_t al = 0; al < sys.m(); ++al)
        for (std::size_t a = 0; a < sys.k(); ++a)
          for (std::size_t b = 0; b < sys.k(); ++b) CHECK(r(al, a, b) == -r(al, b, a));
    }
  }
}

TEST_CASE("g_residuals: examples") {
  const SystemDef p = builtin("constrained_particle");
  CHECK(g_residuals(p, {{0, 1, 0}, {1, 1}, {2}}) == std::vector<double>{1, -1});
  std::mt19937_64 rng(2);
  for (const auto& name : testing::linear_models()) {
    const SystemDef sys = builtin(name);
    for (int i = 0; i < 20; ++i) {
      auto s = testing::random_state(sys, rng);
      s.p = dependent_momenta(sys, {s.q, s.v});
      CHECK(testing::max_abs(g_residuals(sys, s)) == 0.0);
    }
  }
  const SystemDef h = builtin("holonomic_demo");
  for (int i = 0; i < 20; ++i) CHECK(testing::max_abs(g_residuals(h, testing::random_state(h, rng))) == 0.0);
  CHECK_THROWS_AS(g_residuals(builtin("von_neumann2"), {{1, 1}, {0.1}, {1}}), LinearityError);
}

TEST_CASE("field_residual: examples") {
  const auto d = field_residual(builtin("constrained_particle"), {{0, 1, 0}, {1, 1}, {2}});
  CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d[1] == doctest::Approx(-1.0).epsilon(1e-15));

  const SystemDef penny = builtin("rolling_penny");
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    auto s = testing::random_state(penny, rng);
    const double phi = s.q[3];
    s.p[1] = s.p[0] * std::sin(phi) / std::cos(phi);  // p_x sin(phi) = p_y cos(phi)
    CHECK(testing::max_abs(field_residual(penny, s)) <= 1e-12 * (1 + testing::max_abs(s.p)));
  }
}

TEST_CASE("C-bar dY = +g on every linear model") {
  std::mt19937_64 rng(4);
  for (const auto& name : testing::linear_models()) {
    const SystemDef sys = builtin(name);
    for (int i = 0; i < 100; ++i) {
      const VakState s = testing::random_state(sys, rng);
      const auto dy = field_residual(sys, s);
      const auto lhs = cbar(sys, s) * dy;
      const auto g = g_residuals(sys, s);
      CHECK_MESSAGE(testing::max_abs_diff(lhs, g) <= 1e-10, name);
    }
  }
}

TEST_CASE("penny g reproduces the reference pair") {
  // In the engine multipliers, with base order (theta, phi), g_b gives
  // g = -(phidot D, -thetadot D), D = p_x sin(phi) - p_y cos(phi).
  const SystemDef penny = builtin("rolling_penny");
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto s = testing::random_state(penny, rng);
    const double D = s.p[0] * std::sin(s.q[3]) - s.p[1] * std::cos(s.q[3]);
    const auto g = g_residuals(penny, s);
    CHECK(std::fabs(g[0] + s.v[1] * D) <= 1e-12);
    CHECK(std::fabs(g[1] - s.v[0] * D) <= 1e-12);
  }
}

TEST_CASE("el_residual: examples") {
  const SystemDef p = builtin("constrained_particle");
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    auto s = testing::random_state(p, rng);
    s.v[1] = 0.0;
    const NhState ns{s.q, s.v};
    CHECK(testing::max_abs(el_residual(p, ns, nh_rhs(p, ns))) <= 1e-15);
  }
  const NhState ns{{0, 1, 0}, {1, 1}};
  const auto el = el_residual(p, ns, nh_rhs(p, ns));
  CHECK(el[2] == doctest::Approx(0.5).epsilon(1e-15));
  for (const auto& name : testing::linear_models()) {
    const SystemDef sys = builtin(name);
    auto s = testing::random_state(sys, rng);
    std::fill(s.v.begin(), s.v.end(), 0.0);
    NhDerivative rest{std::vector<double>(sys.n()), std::vector<double>(sys.k())};
    CHECK(testing::max_abs(el_residual(sys, {s.q, s.v}, rest)) == 0.0);
  }
}

TEST_CASE("parse_candidates") {
  const auto c = parse_candidates("# comment\nA = p_z - y*dx  # trailing\n\nB=dx\nA = dy\n");
  REQUIRE(c.size() == 3);
  CHECK(c[0].name == "A");
  CHECK(c[1].name == "B");
  CHECK(c[2].name == "A");
  const CandidateSet set(builtin("constrained_particle"), c);
  CHECK(set.names() == std::vector<std::string>{"A", "B"});
  CHECK(set.entries() == std::vector<std::string>{"A", "B", "A"});
  CHECK_THROWS_AS(parse_candidates("A p_z\n"), SystemFormatError);
  CHECK_THROWS_AS(parse_candidates("1A = x\n"), SystemFormatError);
  try {
    parse_candidates("A = x\nB = x +\n");
    FAIL("expected SystemFormatError");
  } catch (const SystemFormatError& e) {
    CHECK(e.line() == 2);
  }
  try {
    CandidateSet(builtin("constrained_particle"), parse_candidates("A = p_x\n"));
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("candidate 'A'") != std::string::npos);
  }
}

TEST_CASE("tangency: particle examples") {
  const SystemDef p = builtin("constrained_particle");
  const auto cands = parse_candidates("C1 = p_z - y*dx\n");
  // G = 0 at p_z = 1; the residual is pdot_z - (ydot xdot + y xdd_vk) with xdd_vk = -0.5.
  const auto t1 = tangency_residuals(p, cands, {{0, 1, 0}, {1, 1}, {1}});
  CHECK(t1.at("C1").values[0] == 0.0);
  CHECK(t1.at("C1").residuals[0] == doctest::Approx(-0.5).epsilon(1e-15));
  const auto t2 = tangency_residuals(p, cands, {{0, 1, 0}, {1, 0}, {1}});
  CHECK(t2.at("C1").values[0] == 0.0);
  CHECK(std::fabs(t2.at("C1").residuals[0]) <= 1e-15);
  // dz is the completed velocity, so both spellings agree
  const auto t3 = tangency_residuals(p, parse_candidates("C1 = p_z - dz\n"), {{0, 1, 0}, {1, 1}, {1}});
  CHECK(t3.at("C1").residuals[0] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("tangency: particle loci are invariant exactly where they hold") {
  const SystemDef p = builtin("constrained_particle");
  const auto cands = parse_candidates(kParticleCandidates);
  std::mt19937_64 rng(7);
  const auto on = [&](const std::string& which) {
    auto s = testing::random_state(p, rng);
    if (which == "C11") s.v[1] = 0.0;
    if (which == "C12") s.v[0] = 0.0;
    if (which == "C2") s.v = {0.0, 0.0};
    if (which != "C2") s.p[0] = s.q[1] * s.v[0];
    return s;
  };
  for (const std::string which : {"C11", "C12", "C2"}) {
    for (int i = 0; i < 100; ++i) {
      const auto t = tangency_residuals(p, cands, on(which));
      CHECK(t.at(which).max_abs_value() <= 1e-15);
      CHECK(t.at(which).max_abs_residual() <= 1e-10);
    }
  }
  // Generic points of C1 = {p_z = y dx} with both velocities nonzero lie on
  // none of the loci and are not invariant.
  for (int i = 0; i < 100; ++i) {
    auto s = testing::random_state(p, rng);
    s.v = {0.5 + std::fabs(s.v[0]), 0.5 + std::fabs(s.v[1])};
    s.p[0] = s.q[1] * s.v[0];
    const auto t = tangency_residuals(p, cands, s);
    for (const std::string which : {"C11", "C12", "C2"}) {
      const bool holds = t.at(which).max_abs_value() <= 1e-10;
      const bool invariant = t.at(which).max_abs_residual() <= 1e-10;
      CHECK_FALSE(holds);
      if (which == "C11") CHECK_FALSE(invariant);
    }
  }
}

TEST_CASE("penny: the reference vakonomic field in the shifted multipliers") {
  // With P = 2*pi - p the reference field reads
  //   thetadd = phidot D / 2, phidd = -thetadot D, Pdot_x = phidot (cos(phi) D - 2 thetadot sin(phi)),
  //   Pdot_y = phidot (sin(phi) D + 2 thetadot cos(phi)),  D = P_x sin(phi) - P_y cos(phi).
  const SystemDef penny = builtin("rolling_penny");
  std::mt19937_64 rng(10);
  for (int i = 0; i < 100; ++i) {
    const auto s = testing::random_state(penny, rng);
    const double th = s.v[0], ph = s.v[1], phi = s.q[3];
    const double c = std::cos(phi), sn = std::sin(phi);
    const double Px = 2 * th * c - s.p[0], Py = 2 * th * sn - s.p[1];
    const double D = Px * sn - Py * c;
    const auto d = vak_rhs(penny, s);
    CHECK(d.dv[0] == doctest::Approx(0.5 * ph * D).epsilon(1e-12));
    CHECK(d.dv[1] == doctest::Approx(-th * D).epsilon(1e-12));
    // Pdot = 2 pidot - pdot with pi = (thetadot cos(phi), thetadot sin(phi))
    const double Pdx = 2 * (d.dv[0] * c - th * ph * sn) - d.dp[0];
    const double Pdy = 2 * (d.dv[0] * sn + th * ph * c) - d.dp[1];
    CHECK(Pdx == doctest::Approx(ph * (c * D - 2 * th * sn)).epsilon(1e-12));
    CHECK(Pdy == doctest::Approx(ph * (sn * D + 2 * th * c)).epsilon(1e-12));
    // and the reference (g1, g2) hold verbatim in P
    const auto g = g_residuals(penny, s);
    CHECK(g[0] == doctest::Approx(ph * D).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(-th * D).epsilon(1e-12));
  }
}

TEST_CASE("tangency: penny C12 is final") {
  const SystemDef penny = builtin("rolling_penny");
  const auto cands = parse_candidates(kPennyCandidates);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    auto s = testing::random_state(penny, rng);
    const double th = s.v[0], phi = s.q[3];
    // reference multipliers P = 2 thetadot (cos, sin), i.e. p = 2 pi - P = 0
    const double Px = 2 * th * std::cos(phi), Py = 2 * th * std::sin(phi);
    s.p = {2 * th * std::cos(phi) - Px, 2 * th * std::sin(phi) - Py};
    const auto t = tangency_residuals(penny, cands, s);
    CHECK(t.at("C12").max_abs_value() <= 1e-14);
    CHECK(t.at("C12").max_abs_residual() <= 1e-12);
    CHECK(t.at("C1").max_abs_residual() <= 1e-12);
  }
  // Taking the reference values as engine multipliers does not give an
  // invariant set: dD/dt = 2 thetadot phidot there.
  const auto literal = parse_candidates("L = p_x*sin(phi) - p_y*cos(phi)\n");
  const VakState s{{0, 0, 0, 0.4}, {1.0, 0.5}, {2 * std::cos(0.4), 2 * std::sin(0.4)}};
  const auto t = tangency_residuals(penny, literal, s);
  CHECK(std::fabs(t.at("L").values[0]) <= 1e-15);
  CHECK(t.at("L").residuals[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("holonomic demo: comparison is trivial") {
  const SystemDef h = builtin("holonomic_demo");
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    const auto s = testing::random_state(h, rng);
    CHECK(curvature(h, s.q).max_abs() <= 1e-12);
    CHECK(testing::max_abs(g_residuals(h, s)) <= 1e-12);
    CHECK(testing::max_abs(field_residual(h, s)) <= 1e-12);
  }
}

TEST_CASE("scan: summary fractions") {
  ScanOptions o;
  o.count = 300;
  o.seed = 42;
  const auto hol = scan(builtin("holonomic_demo"), o, {});
  REQUIRE(hol.summary.fraction_g_zero.has_value());
  CHECK(*hol.summary.fraction_g_zero == 1.0);
  CHECK(hol.summary.evaluated == 300);

  ScanOptions leg = o;
  leg.p_mode = PMode::legendre;
  CHECK(scan(builtin("constrained_particle"), leg, {}).summary.fraction_delta_y_zero == 1.0);

  ScanOptions box = o;
  box.bounds = {{"dx", {0.5, 1.5}}, {"dy", {0.5, 1.5}}};
  const auto r = scan(builtin("constrained_particle"), box, {});
  CHECK(*r.summary.fraction_g_zero == 0.0);
  CHECK(r.summary.fraction_delta_y_zero == 0.0);
  CHECK(r.summary.seed == 42);
  CHECK(r.summary.tol == 1e-10);
}

TEST_CASE("scan: deterministic across thread counts and seeds by sample") {
  const SystemDef p = builtin("constrained_particle");
  ScanOptions o;
  o.count = 64;
  o.seed = 7;
  o.threads = 1;
  const auto cands = parse_candidates(kParticleCandidates);
  const std::string one = to_json(scan(p, o, cands), p);
  o.threads = 4;
  CHECK(to_json(scan(p, o, cands), p) == one);
  // sample i depends only on seed + i
  ScanOptions shifted = o;
  shifted.seed = 8;
  const auto a = scan(p, o, {});
  const auto b = scan(p, shifted, {});
  CHECK(a.records[1].state.q == b.records[0].state.q);
}

TEST_CASE("scan: failing samples are recorded as skipped") {
  ScanOptions o;
  o.count = 50;
  o.bounds = {{"K1", {0.5, 1.5}}, {"K2", {0.5, 1.5}}, {"dK2", {-3, 3}}};
  const auto r = scan(builtin("von_neumann2"), o, {});
  CHECK(r.summary.skipped > 0);
  CHECK(r.summary.skipped + r.summary.evaluated == 50);
  CHECK_FALSE(r.summary.fraction_g_zero.has_value());
  for (const auto& rec : r.records)
    if (rec.skipped) CHECK_FALSE(rec.skipped->empty());
  ScanOptions bad = o;
  bad.bounds = {{"w", {0, 1}}};
  CHECK_THROWS_AS(scan(builtin("von_neumann2"), bad, {}), InputError);
  bad.bounds = {{"K1", {1, 0}}};
  CHECK_THROWS_AS(scan(builtin("von_neumann2"), bad, {}), InputError);
}

TEST_CASE("JSON report schema") {
  const SystemDef p = builtin("constrained_particle");
  ScanOptions o;
  o.count = 5;
  const auto rep = scan(p, o, parse_candidates(kParticleCandidates));
  const json j = json::parse(to_json(rep, p));
  CHECK(j["system"] == "constrained_particle");
  CHECK(j["layout"]["q"] == json({"x", "y", "z"}));
  CHECK(j["layout"]["v"] == json({"dx", "dy"}));
  CHECK(j["layout"]["p"] == json({"p_z"}));
  REQUIRE(j["records"].size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& r = j["records"][i];
    CHECK(r["index"] == i);
    CHECK(r["state"]["q"].size() == 3);
    CHECK(r["g"].size() == 2);
    CHECK(r["deltaY"].size() == 2);
    CHECK(r["tangency"]["C11"]["residuals"].size() == 2);
    CHECK(r["tangency"]["C11"]["values"].size() == 2);
    CHECK(r["tangency"]["C2"]["max_abs_residual"].is_number());
    // doubles round-trip exactly
    CHECK(r["deltaY"][0].get<double>() == rep.records[i].delta_y[0]);
  }
  for (const char* key : {"samples", "evaluated", "skipped", "fraction_g_zero", "fraction_delta_y_zero", "tol", "seed"})
    CHECK(j["summary"].contains(key));

  const auto rec = json::parse(to_json(compare_state(p, {{0, 1, 0}, {1, 1}, {2}}, {}), p));
  CHECK(rec["g"] == json({1.0, -1.0}));
  CHECK(rec["deltaY"][0].get<double>() == doctest::Approx(0.5));
  CHECK(rec["deltaY"][1].get<double>() == doctest::Approx(-1.0));
}
