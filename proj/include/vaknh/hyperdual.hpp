#pragma once

#include <cmath>
#include <ostream>

namespace vaknh {

/// Second-order forward-mode scalar.
///
/// Carries a value, two independent first-order perturbations `d1`, `d2`
/// and the cross term `d12`. Seeding `d1` on variable u and `d2` on
/// variable w and evaluating f yields f, df/du, df/dw and d2f/dudw, all
/// exact up to rounding of the arithmetic itself.
struct HyperDual {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d12 = 0.0;

  constexpr HyperDual() = default;
  constexpr HyperDual(double v) : value(v) {}  // NOLINT(google-explicit-constructor)
  constexpr HyperDual(double v, double a, double b, double ab) : value(v), d1(a), d2(b), d12(ab) {}
};

inline double value_of(double x) { return x; }
inline double value_of(const HyperDual& x) { return x.value; }

constexpr HyperDual operator-(const HyperDual& a) { return {-a.value, -a.d1, -a.d2, -a.d12}; }

constexpr HyperDual operator+(const HyperDual& a, const HyperDual& b) {
  return {a.value + b.value, a.d1 + b.d1, a.d2 + b.d2, a.d12 + b.d12};
}

constexpr HyperDual operator-(const HyperDual& a, const HyperDual& b) {
  return {a.value - b.value, a.d1 - b.d1, a.d2 - b.d2, a.d12 - b.d12};
}

constexpr HyperDual operator*(const HyperDual& a, const HyperDual& b) {
  return {a.value * b.value,
          a.value * b.d1 + a.d1 * b.value,
          a.value * b.d2 + a.d2 * b.value,
          a.value * b.d12 + a.d1 * b.d2 + a.d2 * b.d1 + a.d12 * b.value};
}

// Chain rule for a scalar function with derivatives f1 = f'(a), f2 = f''(a).
constexpr HyperDual lift(const HyperDual& a, double f0, double f1, double f2) {
  return {f0, f1 * a.d1, f1 * a.d2, f1 * a.d12 + f2 * a.d1 * a.d2};
}

inline HyperDual reciprocal(const HyperDual& a) {
  const double inv = 1.0 / a.value;
  return lift(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline HyperDual operator/(const HyperDual& a, const HyperDual& b) { return a * reciprocal(b); }

inline HyperDual& operator+=(HyperDual& a, const HyperDual& b) { return a = a + b; }
inline HyperDual& operator-=(HyperDual& a, const HyperDual& b) { return a = a - b; }
inline HyperDual& operator*=(HyperDual& a, const HyperDual& b) { return a = a * b; }

inline HyperDual sin(const HyperDual& a) {
  const double s = std::sin(a.value);
  return lift(a, s, std::cos(a.value), -s);
}

inline HyperDual cos(const HyperDual& a) {
  const double c = std::cos(a.value);
  return lift(a, c, -std::sin(a.value), -c);
}

inline HyperDual tan(const HyperDual& a) {
  const double t = std::tan(a.value);
  const double sec2 = 1.0 + t * t;
  return lift(a, t, sec2, 2.0 * t * sec2);
}

inline HyperDual exp(const HyperDual& a) {
  const double e = std::exp(a.value);
  return lift(a, e, e, e);
}

inline HyperDual log(const HyperDual& a) {
  const double inv = 1.0 / a.value;
  return lift(a, std::log(a.value), inv, -inv * inv);
}

inline HyperDual sqrt(const HyperDual& a) {
  const double s = std::sqrt(a.value);
  const double f1 = 0.5 / s;
  return lift(a, s, f1, -0.5 * f1 / a.value);
}

// a^c for a constant real exponent c; caller guarantees a > 0.
inline double pow_real(double a, double c) { return std::pow(a, c); }
inline HyperDual pow_real(const HyperDual& a, double c) {
  const double f0 = std::pow(a.value, c);
  const double f1 = c * std::pow(a.value, c - 1.0);
  const double f2 = c * (c - 1.0) * std::pow(a.value, c - 2.0);
  return lift(a, f0, f1, f2);
}

inline std::ostream& operator<<(std::ostream& os, const HyperDual& a) {
  return os << '(' << a.value << ", " << a.d1 << ", " << a.d2 << ", " << a.d12 << ')';
}

}  // namespace vaknh
