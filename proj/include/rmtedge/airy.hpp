#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rmtedge {

struct AiryValue {
  double ai = 0.0;
  double aip = 0.0;  // derivative
};

namespace detail {

// Maclaurin series Ai = c1 f - c2 g, evaluated in extended precision; the
// two series grow like Bi and cancel for positive arguments, so it is only
// used on [-8, 2].
inline AiryValue airy_series(double x) {
  using ld = long double;
  static const ld c1 = 1.0L / (std::cbrt(9.0L) * std::tgamma(2.0L / 3.0L));
  static const ld c2 = 1.0L / (std::cbrt(3.0L) * std::tgamma(1.0L / 3.0L));
  const ld z = x;
  const ld z3 = z * z * z;
  ld f = 1.0L, t = 1.0L;         // f = sum t_k
  ld g = z, u = z;               // g = sum u_k
  ld fp = 0.0L, d = z * z / 2;   // f' = sum d_k, d_1 = z^2/2
  ld gp = 1.0L, e = 1.0L;        // g' = sum e_k
  fp = d;
  for (int k = 1; k < 400; ++k) {
    t *= z3 / ((3.0L * k - 1.0L) * (3.0L * k));
    u *= z3 / ((3.0L * k) * (3.0L * k + 1.0L));
    e *= z3 / ((3.0L * k) * (3.0L * k - 2.0L));
    if (k > 1) d *= z3 / ((3.0L * k - 1.0L) * (3.0L * k - 3.0L));
    f += t;
    g += u;
    gp += e;
    if (k > 1) fp += d;
    const ld scale = std::abs(f) + std::abs(g) + std::abs(fp) + std::abs(gp);
    if (std::abs(t) + std::abs(u) + std::abs(d) + std::abs(e) <= 1e-21L * scale) break;
  }
  return {static_cast<double>(c1 * f - c2 * g), static_cast<double>(c1 * fp - c2 * gp)};
}

// e^{zeta} K_nu(zeta) by the trapezoidal rule on
// K_nu(zeta) = int_0^inf exp(-zeta cosh t) cosh(nu t) dt; the integrand is
// entire and doubly-exponentially decaying, so the rule converges
// geometrically in 1/h.
inline double scaled_bessel_k(double nu, double zeta) {
  constexpr double h = 0.125;
  double acc = 0.5;  // t = 0 term, halved
  for (int k = 1; k < 4000; ++k) {
    const double t = k * h;
    const double expo = -zeta * (std::cosh(t) - 1.0);
    if (expo < -745.0) break;
    const double term = std::exp(expo) * std::cosh(nu * t);
    acc += term;
    if (term < 1e-18 * acc) break;
  }
  return h * acc;
}

// Coefficients u_k of the large-argument expansions (DLMF 9.7.2).
inline double airy_u(int k) {
  double u = 1.0;
  for (int j = 1; j <= k; ++j) {
    u *= (6.0 * j - 5.0) * (6.0 * j - 3.0) * (6.0 * j - 1.0) / ((2.0 * j - 1.0) * 216.0 * j);
  }
  return u;
}

inline double airy_v(int k) { return k == 0 ? 1.0 : -(6.0 * k + 1.0) / (6.0 * k - 1.0) * airy_u(k); }

// Asymptotic series for x >= 8, summed to the smallest term.
inline AiryValue airy_positive_asymptotic(double x) {
  const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
  double su = 0.0, sv = 0.0;
  double last_u = INFINITY, last_v = INFINITY;
  double u = 1.0, v = 1.0, zpow = 1.0;
  for (int k = 0; k < 60; ++k) {
    u = airy_u(k) / zpow;
    v = airy_v(k) / zpow;
    if (std::abs(u) > last_u && std::abs(v) > last_v) break;
    const double sign = (k % 2) ? -1.0 : 1.0;
    su += sign * u;
    sv += sign * v;
    last_u = std::abs(u);
    last_v = std::abs(v);
    if (last_u < 1e-17 * std::abs(su) && last_v < 1e-17 * std::abs(sv)) break;
    zpow *= zeta;
  }
  const double pre = std::exp(-zeta) / (2.0 * std::sqrt(std::numbers::pi));
  const double q = std::pow(x, 0.25);
  return {pre / q * su, -pre * q * sv};
}

// Oscillatory asymptotic series for x <= -8 (DLMF 9.7.9, 9.7.10).
inline AiryValue airy_negative_asymptotic(double x) {
  const double X = -x;
  const double zeta = 2.0 / 3.0 * X * std::sqrt(X);
  double P = 0.0, Q = 0.0, R = 0.0, S = 0.0;
  double zpow = 1.0;
  double last = INFINITY;
  for (int k = 0; k < 60; ++k) {
    const double uk = airy_u(k) / zpow;
    const double vk = airy_v(k) / zpow;
    if (std::abs(uk) > last) break;
    last = std::abs(uk);
    const int m = k / 2;
    const double sign = (m % 2) ? -1.0 : 1.0;
    if (k % 2 == 0) {
      P += sign * uk;
      R += sign * vk;
    } else {
      Q += sign * uk;
      S += sign * vk;
    }
    if (last < 1e-18) break;
    zpow *= zeta;
  }
  const double phase = zeta - std::numbers::pi / 4.0;
  const double c = std::cos(phase);
  const double s = std::sin(phase);
  const double q = std::pow(X, 0.25);
  const double rpi = 1.0 / std::sqrt(std::numbers::pi);
  return {rpi / q * (c * P + s * Q), rpi * q * (s * R - c * S)};
}

/// Ai and Ai' for any real x; underflows to zero beyond x ~ 105.
inline AiryValue airy_unchecked(double x) {
  if (x > 105.0) return {0.0, 0.0};
  if (x >= 8.0) return airy_positive_asymptotic(x);
  if (x > 2.0) {
    const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
    const double ez = std::exp(-zeta);
    const double ai = std::sqrt(x / 3.0) / std::numbers::pi * ez * scaled_bessel_k(1.0 / 3.0, zeta);
    const double aip = -x / (std::numbers::pi * std::sqrt(3.0)) * ez * scaled_bessel_k(2.0 / 3.0, zeta);
    return {ai, aip};
  }
  if (x >= -8.0) return airy_series(x);
  return airy_negative_asymptotic(x);
}

}  // namespace detail

/// Ai(s) and Ai'(s) for |s| <= 40.
inline AiryValue airy_pair(double s) {
  if (!(std::abs(s) <= 40.0)) throw std::out_of_range("airy: argument outside [-40, 40]");
  return detail::airy_unchecked(s);
}

inline double airy(double s) { return airy_pair(s).ai; }

}  // namespace rmtedge
