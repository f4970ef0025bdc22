#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "rmtedge/errors.hpp"

namespace rmtedge {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton on P_n from Chebyshev
/// initial guesses).
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    long double x = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) / (n + 0.5L));
    long double dp = 0.0L;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1.0L;
      long double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const long double p2 = ((2.0L * k - 1.0L) * x * p1 - (k - 1.0L) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0L;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0L);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-19L) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NumericalError("gauss_legendre: Newton iteration did not converge");
    // Recompute the derivative at the converged node.
    long double p0 = 1.0L;
    long double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const long double p2 = ((2.0L * k - 1.0L) * x * p1 - (k - 1.0L) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0L;
    dp = n * (x * p1 - p0) / (x * x - 1.0L);
    const long double w = 2.0L / ((1.0L - x * x) * dp * dp);
    rule.nodes[i] = static_cast<double>(-x);
    rule.nodes[n - 1 - i] = static_cast<double>(x);
    rule.weights[i] = static_cast<double>(w);
    rule.weights[n - 1 - i] = static_cast<double>(w);
  }
  return rule;
}

/// Integral of f over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
double gauss_legendre_integrate(F&& f, double a, double b, int n) {
  const QuadratureRule rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * acc;
}

}  // namespace rmtedge
