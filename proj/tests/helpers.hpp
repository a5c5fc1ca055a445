#pragma once

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vaknh/models.hpp"
#include "vaknh/system.hpp"

namespace testing {

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::fabs(x));
  return m;
}

inline std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

// A state inside the model's domain: the von Neumann square root needs
// positive capital and small net formation.
inline vaknh::VakState random_state(const vaknh::SystemDef& sys, std::mt19937_64& rng) {
  if (sys.name() == "von_neumann2")
    return {uniform(rng, sys.n(), 0.5, 1.5), uniform(rng, sys.k(), -0.3, 0.3), uniform(rng, sys.m(), 0.5, 1.5)};
  return {uniform(rng, sys.n(), -1.5, 1.5), uniform(rng, sys.k(), -1.0, 1.0), uniform(rng, sys.m(), -1.0, 1.0)};
}

inline std::vector<std::string> linear_models() {
  return {"constrained_particle", "rolling_penny", "martinet", "paramecium", "holonomic_demo"};
}

// Martinet distribution with the full Euclidean metric on R^3. Used where
// a regular ambient Lagrangian is required.
inline vaknh::SystemDef euclidean_martinet() {
  return vaknh::load_system(
      "name euclidean_martinet\n"
      "coords x y z\n"
      "dependent z\n"
      "lagrangian 0.5*(dx^2+dy^2+dz^2)\n"
      "psi z = (y^2/2)*dx\n"
      "linear true\n");
}

}  // namespace testing
