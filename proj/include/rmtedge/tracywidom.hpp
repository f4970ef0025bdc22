#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmtedge/airy.hpp"
#include "rmtedge/errors.hpp"
#include "rmtedge/quadrature.hpp"

namespace rmtedge {

/// Hastings-McLeod solution of q'' = s q + 2 q^3 sampled on a uniform grid,
/// together with the integrals that generate the Tracy-Widom laws.
struct PainleveSolution {
  std::vector<double> s;           // ascending grid
  std::vector<double> q;
  std::vector<double> dq;
  std::vector<double> int_q;       // int_s^inf q(x) dx
  std::vector<double> int_q2;      // int_s^inf q(x)^2 dx
  std::vector<double> int_xq2;     // int_s^inf (x - s) q(x)^2 dx
  double s_max = 8.0;
  double max_ode_residual = 0.0;   // |q'' - s q - 2 q^3| at grid nodes, from the RHS
};

namespace detail {

// q, q', int q, int q^2, int (x-s) q^2, carried in extended precision:
// perturbations of the Hastings-McLeod branch grow like
// exp((2 sqrt(2)/3) |s|^{3/2}) as s decreases.
using Real = long double;
using State = std::array<Real, 5>;

inline State painleve_rhs(Real s, const State& y) {
  const Real q = y[0];
  return {y[1], s * q + 2.0 * q * q * q, -q, -q * q, -y[3]};
}

// One adaptive Dormand-Prince 5(4) integration from s0 to s1 (either
// direction). Error control is relative: q is of size Ai(s) near the
// matching point, far below any useful absolute tolerance.
inline State dormand_prince(Real s0, Real s1, State y, Real tol, Real& h_hint) {
  using D = Real;
  static constexpr D c2 = 1.0L / 5, c3 = 3.0L / 10, c4 = 4.0L / 5, c5 = 8.0L / 9;
  static constexpr D a21 = 1.0L / 5;
  static constexpr D a31 = 3.0L / 40, a32 = 9.0L / 40;
  static constexpr D a41 = 44.0L / 45, a42 = -56.0L / 15, a43 = 32.0L / 9;
  static constexpr D a51 = 19372.0L / 6561, a52 = -25360.0L / 2187, a53 = 64448.0L / 6561, a54 = -212.0L / 729;
  static constexpr D a61 = 9017.0L / 3168, a62 = -355.0L / 33, a63 = 46732.0L / 5247, a64 = 49.0L / 176,
                          a65 = -5103.0L / 18656;
  static constexpr D b1 = 35.0L / 384, b3 = 500.0L / 1113, b4 = 125.0L / 192, b5 = -2187.0L / 6784, b6 = 11.0L / 84;
  static constexpr D e1 = 71.0L / 57600, e3 = -71.0L / 16695, e4 = 71.0L / 1920, e5 = -17253.0L / 339200,
                          e6 = 22.0L / 525, e7 = -1.0L / 40;

  const Real dir = s1 > s0 ? 1.0L : -1.0L;
  Real s = s0;
  Real h = std::min(std::abs(h_hint), std::abs(s1 - s0)) * dir;
  for (int steps = 0; steps < 1'000'000; ++steps) {
    if ((s1 - s) * dir <= 0.0) return y;
    if ((s + h - s1) * dir > 0.0) h = s1 - s;
    auto axpy = [&](std::initializer_list<std::pair<Real, const State*>> terms) {
      State out = y;
      for (const auto& [c, k] : terms) {
        for (int i = 0; i < 5; ++i) out[i] += h * c * (*k)[i];
      }
      return out;
    };
    const State k1 = painleve_rhs(s, y);
    const State k2 = painleve_rhs(s + c2 * h, axpy({{a21, &k1}}));
    const State k3 = painleve_rhs(s + c3 * h, axpy({{a31, &k1}, {a32, &k2}}));
    const State k4 = painleve_rhs(s + c4 * h, axpy({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = painleve_rhs(s + c5 * h, axpy({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 = painleve_rhs(s + h, axpy({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State y5 = axpy({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = painleve_rhs(s + h, y5);
    Real err = 0.0L;
    for (int i = 0; i < 5; ++i) {
      const Real ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const Real sc = tol * std::max(std::abs(y[i]), std::abs(y5[i])) + 1e-300L;
      err = std::max(err, std::abs(ei) / sc);
    }
    if (!std::isfinite(err)) {
      throw NumericalError("Painleve integration blew up near s = " + std::to_string(static_cast<double>(s)));
    }
    if (err <= 1.0) {
      s += h;
      y = y5;
      h_hint = std::abs(h);
    }
    const Real factor = err == 0.0L ? 5.0L : std::clamp(0.9L * std::pow(err, -0.2L), 0.2L, 5.0L);
    h *= factor;
    if (std::abs(h) < 1e-14L) {
      throw NumericalError("Painleve integration step underflow near s = " + std::to_string(static_cast<double>(s)));
    }
  }
  throw NumericalError("Painleve integration exceeded the step budget");
}

}  // namespace detail

/// Integrates Painleve II from s_max, where q is matched to Ai, down to
/// s_min, recording the solution every `step`.
inline PainleveSolution hastings_mcleod(double s_min, double s_max = 8.0, double step = 0.02, double tol = 1e-17) {
  if (!(s_max >= 6.0)) throw std::invalid_argument("hastings_mcleod: need s_max >= 6");
  if (!(s_min < s_max) || !(step > 0.0)) throw std::invalid_argument("hastings_mcleod: bad grid");
  const auto nsteps = static_cast<long>(std::llround((s_max - s_min) / step));
  if (std::abs(s_min + nsteps * step - s_max) > 1e-9) {
    throw std::invalid_argument("hastings_mcleod: grid step must divide s_max - s_min");
  }

  // Tail integrals of Ai^2 beyond s_max in closed form; int Ai by quadrature.
  const AiryValue a = detail::airy_unchecked(s_max);
  const double tail_q2 = a.aip * a.aip - s_max * a.ai * a.ai;
  const double tail_xq2 = -(s_max * s_max * a.ai * a.ai - s_max * a.aip * a.aip + a.ai * a.aip) / 3.0;
  double tail_q = 0.0;
  for (double lo = s_max; lo < s_max + 40.0; lo += 2.0) {
    tail_q += gauss_legendre_integrate([](double x) { return detail::airy_unchecked(x).ai; }, lo, lo + 2.0, 30);
  }

  detail::State y{a.ai, a.aip, tail_q, tail_q2, tail_xq2 - s_max * tail_q2};
  const detail::Real ltol = tol;
  PainleveSolution out;
  out.s_max = s_max;
  const std::size_t n = static_cast<std::size_t>(nsteps) + 1;
  out.s.resize(n);
  out.q.resize(n);
  out.dq.resize(n);
  out.int_q.resize(n);
  out.int_q2.resize(n);
  out.int_xq2.resize(n);
  detail::Real h = 1e-3L;
  for (long k = nsteps; k >= 0; --k) {
    const double s = s_min + k * step;
    if (k != nsteps) y = detail::dormand_prince(s_min + (k + 1) * static_cast<detail::Real>(step),
                                                s_min + k * static_cast<detail::Real>(step), y, ltol, h);
    const auto i = static_cast<std::size_t>(k);
    out.s[i] = s;
    out.q[i] = static_cast<double>(y[0]);
    out.dq[i] = static_cast<double>(y[1]);
    out.int_q[i] = static_cast<double>(y[2]);
    out.int_q2[i] = static_cast<double>(y[3]);
    out.int_xq2[i] = static_cast<double>(y[4]);
    if (!(y[0] > 0.0L) || !std::isfinite(static_cast<double>(y[0])) || std::abs(y[0]) > 1e3L) {
      throw NumericalError("hastings_mcleod: solution left the Hastings-McLeod branch at s = " + std::to_string(s));
    }
  }
  // Second-difference check of the ODE on the interior grid. The central
  // difference carries an O(step^2 q^(4)) truncation term, removed with a
  // five-point estimate of q^(4).
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double d2 = (out.q[i + 1] - 2.0 * out.q[i] + out.q[i - 1]) / (step * step);
    const double rhs = out.s[i] * out.q[i] + 2.0 * std::pow(out.q[i], 3);
    const double d4 =
        (out.q[i + 2] - 4 * out.q[i + 1] + 6 * out.q[i] - 4 * out.q[i - 1] + out.q[i - 2]) / std::pow(step, 4);
    out.max_ode_residual = std::max(out.max_ode_residual, std::abs(d2 - rhs - step * step * d4 / 12.0));
  }
  return out;
}

namespace detail {

struct AiryKernelNodes {
  std::vector<double> x;
  std::vector<double> w;
  std::vector<double> ai;
  std::vector<double> aip;
};

// Gauss-Legendre nodes pushed to (s, inf) by x = s + 10 tan(pi (u + 1) / 4).
inline AiryKernelNodes airy_kernel_nodes(double s, int n) {
  const QuadratureRule rule = gauss_legendre(n);
  AiryKernelNodes nodes;
  nodes.x.resize(n);
  nodes.w.resize(n);
  nodes.ai.resize(n);
  nodes.aip.resize(n);
  for (int i = 0; i < n; ++i) {
    const double theta = std::numbers::pi * (rule.nodes[i] + 1.0) / 4.0;
    const double c = std::cos(theta);
    nodes.x[i] = s + 10.0 * std::tan(theta);
    nodes.w[i] = rule.weights[i] * 10.0 * (std::numbers::pi / 4.0) / (c * c);
    const AiryValue a = airy_unchecked(nodes.x[i]);
    nodes.ai[i] = a.ai;
    nodes.aip[i] = a.aip;
  }
  return nodes;
}

}  // namespace detail

/// det(I - K_Airy) on L^2(s, inf) by Nystrom discretization with n nodes.
inline double fredholm_f2_nodes(double s, int n) {
  if (n < 1) throw std::invalid_argument("fredholm_f2: need at least one node");
  const auto nd = detail::airy_kernel_nodes(s, n);
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double k;
      if (i == j) {
        k = nd.aip[i] * nd.aip[i] - nd.x[i] * nd.ai[i] * nd.ai[i];
      } else {
        k = (nd.ai[i] * nd.aip[j] - nd.aip[i] * nd.ai[j]) / (nd.x[i] - nd.x[j]);
      }
      M(i, j) = (i == j ? 1.0 : 0.0) - std::sqrt(nd.w[i]) * k * std::sqrt(nd.w[j]);
    }
  }
  return M.partialPivLu().determinant();
}

/// F_2(s) from the Airy-kernel Fredholm determinant, with n and 2n nodes
/// required to agree to 1e-8.
inline double fredholm_f2(double s, int nodes = 40) {
  if (nodes < 40) throw std::invalid_argument("fredholm_f2: need at least 40 nodes");
  const double coarse = fredholm_f2_nodes(s, nodes);
  const double fine = fredholm_f2_nodes(s, 2 * nodes);
  if (!(std::abs(fine - coarse) <= 1e-8)) {
    throw NumericalError("fredholm_f2: no convergence between " + std::to_string(nodes) + " and " +
                         std::to_string(2 * nodes) + " nodes at s = " + std::to_string(s));
  }
  return std::clamp(fine, 0.0, 1.0);
}

/// F_1(s) = det(I - K_1) on L^2(s, inf) with K_1(x, y) = Ai((x + y)/2) / 2.
inline double fredholm_f1_nodes(double s, int n) {
  const QuadratureRule rule = gauss_legendre(n);
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    const double theta = std::numbers::pi * (rule.nodes[i] + 1.0) / 4.0;
    const double c = std::cos(theta);
    x[i] = s + 10.0 * std::tan(theta);
    w[i] = rule.weights[i] * 10.0 * (std::numbers::pi / 4.0) / (c * c);
  }
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double k = 0.5 * detail::airy_unchecked(0.5 * (x[i] + x[j])).ai;
      M(i, j) = (i == j ? 1.0 : 0.0) - std::sqrt(w[i]) * k * std::sqrt(w[j]);
    }
  }
  return M.partialPivLu().determinant();
}

/// Tabulated Tracy-Widom distribution functions for beta = 1, 2.
class TWTable {
 public:
  struct Options {
    double s_min = -10.0;
    double s_max = 6.0;
    double step = 0.02;
    double painleve_match = 8.0;
    bool with_fredholm = true;
    int fredholm_nodes = 40;
  };

  TWTable() : TWTable(Options{}) {}

  explicit TWTable(const Options& opt) : opt_(opt) {
    const PainleveSolution sol = hastings_mcleod(opt.s_min, opt.painleve_match, opt.step);
    const auto n = static_cast<std::size_t>(std::llround((opt.s_max - opt.s_min) / opt.step)) + 1;
    s_.resize(n);
    f1_.resize(n);
    f2_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      s_[i] = sol.s[i];
      f2_[i] = std::exp(-sol.int_xq2[i]);
      f1_[i] = std::exp(-0.5 * (sol.int_xq2[i] + sol.int_q[i]));
    }
    q0_ = sol.q[static_cast<std::size_t>(std::llround(-opt.s_min / opt.step))];
    ode_residual_ = sol.max_ode_residual;
    if (opt.with_fredholm) {
      f2_fredholm_.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        f2_fredholm_[i] = fredholm_f2(s_[i], opt.fredholm_nodes);
        route_gap_ = std::max(route_gap_, std::abs(f2_fredholm_[i] - f2_[i]));
      }
    }
    slopes_[0] = monotone_slopes(f1_);
    slopes_[1] = monotone_slopes(f2_);
  }

  [[nodiscard]] const std::vector<double>& s() const noexcept { return s_; }
  [[nodiscard]] const std::vector<double>& F1() const noexcept { return f1_; }
  [[nodiscard]] const std::vector<double>& F2() const noexcept { return f2_; }
  [[nodiscard]] const std::vector<double>& F2_fredholm() const noexcept { return f2_fredholm_; }
  /// max |F2_painleve - F2_fredholm| over the grid; 0 without the Fredholm route.
  [[nodiscard]] double route_gap() const noexcept { return route_gap_; }
  [[nodiscard]] double q_at_zero() const noexcept { return q0_; }
  [[nodiscard]] double ode_residual() const noexcept { return ode_residual_; }
  [[nodiscard]] const Options& options() const noexcept { return opt_; }

  /// Monotone cubic (Fritsch-Carlson) interpolation of F_beta; arguments
  /// outside the grid are clipped and `clipped` is set.
  [[nodiscard]] double cdf(int beta, double s, bool* clipped = nullptr) const {
    const auto& f = column(beta);
    const auto& m = slopes_[beta - 1];
    const bool outside = s < s_.front() || s > s_.back();
    if (clipped) *clipped = outside;
    if (s <= s_.front()) return f.front();
    if (s >= s_.back()) return f.back();
    const double h = opt_.step;
    auto i = static_cast<std::size_t>((s - s_.front()) / h);
    i = std::min(i, s_.size() - 2);
    const double t = (s - s_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double v = (2 * t3 - 3 * t2 + 1) * f[i] + (t3 - 2 * t2 + t) * h * m[i] + (-2 * t3 + 3 * t2) * f[i + 1] +
                     (t3 - t2) * h * m[i + 1];
    return std::clamp(v, 0.0, 1.0);
  }

  /// Density by differentiating the interpolant.
  [[nodiscard]] double density(int beta, double s) const {
    const auto& f = column(beta);
    const auto& m = slopes_[beta - 1];
    if (s < s_.front() || s > s_.back()) return 0.0;
    const double h = opt_.step;
    auto i = static_cast<std::size_t>((s - s_.front()) / h);
    i = std::min(i, s_.size() - 2);
    const double t = (s - s_[i]) / h;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * f[i] + (3 * t2 - 4 * t + 1) * h * m[i] + (-6 * t2 + 6 * t) * f[i + 1] +
            (3 * t2 - 2 * t) * h * m[i + 1]) /
           h;
  }

  /// Inverse of cdf by bisection.
  [[nodiscard]] double quantile(int beta, double p) const {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("TWTable::quantile: need 0 < p < 1");
    double lo = s_.front(), hi = s_.back();
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(beta, mid) < p) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  /// Mean from the tabulated CDF: s_max F(s_max) - s_min F(s_min) - int F,
  /// composite Simpson on the grid.
  [[nodiscard]] double mean(int beta) const {
    const auto& f = column(beta);
    const std::size_t n = f.size();
    const double h = opt_.step;
    double integral = 0.0;
    const std::size_t even = (n - 1) % 2 == 0 ? n : n - 1;
    for (std::size_t i = 0; i + 2 < even; i += 2) integral += h / 3.0 * (f[i] + 4 * f[i + 1] + f[i + 2]);
    if (even != n) integral += 0.5 * h * (f[n - 2] + f[n - 1]);
    return s_.back() * f.back() - s_.front() * f.front() - integral;
  }

 private:
  [[nodiscard]] const std::vector<double>& column(int beta) const {
    if (beta == 1) return f1_;
    if (beta == 2) return f2_;
    throw std::invalid_argument("TWTable: beta must be 1 or 2");
  }

  [[nodiscard]] std::vector<double> monotone_slopes(const std::vector<double>& f) const {
    const std::size_t n = f.size();
    const double h = opt_.step;
    std::vector<double> delta(n - 1), m(n);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (f[i + 1] - f[i]) / h;
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      m[i] = (delta[i - 1] * delta[i] <= 0.0) ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (delta[i] == 0.0) {
        m[i] = m[i + 1] = 0.0;
        continue;
      }
      const double a = m[i] / delta[i];
      const double b = m[i + 1] / delta[i];
      const double r = a * a + b * b;
      if (r > 9.0) {
        const double tau = 3.0 / std::sqrt(r);
        m[i] = tau * a * delta[i];
        m[i + 1] = tau * b * delta[i];
      }
    }
    return m;
  }

  Options opt_;
  std::vector<double> s_, f1_, f2_, f2_fredholm_;
  std::array<std::vector<double>, 2> slopes_;
  double route_gap_ = 0.0;
  double q0_ = 0.0;
  double ode_residual_ = 0.0;
};

/// Process-wide table with the default grid, built on first use.
inline const TWTable& tw_table() {
  static const TWTable table;
  return table;
}

/// F_beta(s) for beta in {1, 2}; out-of-range s is clipped to the table with
/// a one-time warning on std::clog.
inline double tw_cdf(int beta, double s) {
  bool clipped = false;
  const double v = tw_table().cdf(beta, s, &clipped);
  if (clipped) {
    static std::once_flag warned;
    std::call_once(warned, [s] {
      std::clog << "warning: Tracy-Widom argument " << s << " outside the tabulated range; clipped\n";
    });
  }
  return v;
}

}  // namespace rmtedge
