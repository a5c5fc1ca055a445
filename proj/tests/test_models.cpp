#include <doctest.h>

#include <filesystem>

#include "vaknh/models.hpp"

using namespace vaknh;

TEST_CASE("catalog lists the six built-ins") {
  CHECK(catalog_names() == std::vector<std::string>{"constrained_particle", "holonomic_demo", "martinet",
                                                      "paramecium", "rolling_penny", "von_neumann2"});
  for (const auto& name : catalog_names()) CHECK_FALSE(catalog_description(name).empty());
}

TEST_CASE("builtin: examples") {
  const SystemDef p = builtin("constrained_particle");
  CHECK(p.n() == 3);
  CHECK(p.m() == 1);
  CHECK(p.verified_linear());
  const SystemDef penny = builtin("rolling_penny");
  CHECK(penny.n() == 4);
  CHECK(penny.m() == 2);
  CHECK(penny.verified_linear());
  CHECK(penny.base() == std::vector<std::string>{"theta", "phi"});
  CHECK(penny.dependent() == std::vector<std::string>{"x", "y"});
  try {
    builtin("unknown");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    const std::string what = e.what();
    for (const auto& name : catalog_names()) CHECK(what.find(name) != std::string::npos);
  }
}

TEST_CASE("parameters") {
  const SystemDef pm = builtin("paramecium");
  REQUIRE(pm.params().size() == 1);
  CHECK(pm.params()[0] == std::pair<std::string, double>{"eps", 1.0});
  CHECK(builtin("paramecium", {{"eps", 0.5}}).params()[0].second == 0.5);
  const SystemDef vn = builtin("von_neumann2");
  const auto m = vn.param_map();
  CHECK(m.at("a1") + m.at("a2") == 1.0);
  CHECK_FALSE(vn.declared_linear());
  CHECK_THROWS_AS(builtin("martinet", {{"eps", 1}}), InputError);
}

TEST_CASE("declared linearity matches verification and sources round-trip") {
  for (const auto& name : catalog_names()) {
    const SystemDef s = builtin(name);
    CHECK_MESSAGE(s.declared_linear() == verify_linearity(s, 64, 123).linear, name);
    CHECK(load_system(serialize(s)) == s);
    CHECK(load_system(catalog_source(name)) == s);
  }
}

TEST_CASE("embedded catalog matches the shipped model files") {
  for (const auto& name : catalog_names()) {
    const std::string path = std::string(VAKNH_SOURCE_DIR) + "/models/" + name + ".sys";
    REQUIRE(std::filesystem::exists(path));
    CHECK(load_system_file(path) == builtin(name));
    CHECK(resolve_system(path) == builtin(name));
    CHECK(resolve_system(name) == builtin(name));
  }
  CHECK(resolve_system("paramecium", {{"eps", 2}}).params()[0].second == 2.0);
  CHECK_THROWS_AS(resolve_system("no/such/file.sys"), InputError);
}
