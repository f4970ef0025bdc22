#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmtedge/distributions.hpp"
#include "rmtedge/errors.hpp"
#include "rmtedge/rng.hpp"

namespace rmtedge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Result of the four-moment matcher together with how it was built.
struct FourMomentLaw {
  EntryDistribution law;
  bool fallback = false;  // three-atom closed form instead of (X + Y_t)/sqrt(2)
  double t = 0.0;         // fourth moment of Y_t, only meaningful if !fallback
};

/// D(A) such that the support of four_moment_bounded(A, B) lies in [-D B, D B].
inline double four_moment_support_constant(double A) {
  const double x_max = std::sqrt(2.0) * std::abs(A) + std::sqrt(1.0 + 2.0 * A * A);
  return std::max((4.0 + x_max) / std::sqrt(2.0), 0.5 * std::abs(A) + 1.0);
}

/// Finitely supported law with moments (0, 1, A, B).
///
/// For B >= 2A^2 + 2 the law is that of (X + Y_t)/sqrt(2) with X a two-point
/// law carrying the skewness and Y_t the symmetric four-point family with
/// E Y_t^4 = t; then E x^4 = (8A^2 + 7 + t)/4, hence t = 4B - 8A^2 - 7.
/// Below that threshold Y_t is not a probability law (t < 1), and the law is
/// instead the three-point Gauss rule for the moment sequence
/// (1, 0, 1, A, B, 2AB - A^3), whose nodes are 0 and the roots of
/// r^2 - A r - (B - A^2). At B = A^2 + 1 the middle weight vanishes and the
/// two-point boundary law remains.
inline FourMomentLaw four_moment_construction(double A, double B) {
  if (!std::isfinite(A) || !std::isfinite(B)) throw std::invalid_argument("four_moment_bounded: non-finite moments");
  const double gap = B - (A * A + 1.0);
  if (gap < -1e-12 * std::max(1.0, B)) {
    throw std::invalid_argument("four_moment_bounded: infeasible moments, need B >= A^2 + 1 (got A=" +
                                std::to_string(A) + ", B=" + std::to_string(B) + ")");
  }

  Discrete d;
  d.from_four_moment = true;
  d.A = A;
  d.B = B;
  FourMomentLaw out{EntryDistribution{}, false, 0.0};

  const double t = 4.0 * B - 8.0 * A * A - 7.0;
  if (t >= 1.0) {
    const double root = std::sqrt(1.0 + 2.0 * A * A);
    const double xa = std::sqrt(2.0) * A - root;
    const double xb = std::sqrt(2.0) * A + root;
    const double pa = (std::sqrt(2.0) * A + root) / (2.0 * root);
    const double pb = (-std::sqrt(2.0) * A + root) / (2.0 * root);

    const double p_out = 1.0 / (2.0 * t * (-1.0 + t + t * t));
    const double p_in = 0.5 - p_out;
    const double y_in = std::sqrt(t / (1.0 + t));
    const double ys[4] = {-t, -y_in, y_in, t};
    const double qs[4] = {p_out, p_in, p_in, p_out};

    for (int i = 0; i < 2; ++i) {
      const double xv = i == 0 ? xa : xb;
      const double pv = i == 0 ? pa : pb;
      for (int k = 0; k < 4; ++k) {
        const double w = pv * qs[k];
        if (w <= 0.0) continue;
        d.atoms.push_back((xv + ys[k]) / std::sqrt(2.0));
        d.weights.push_back(w);
      }
    }
    out.t = t;
  } else {
    const double spread = std::sqrt(std::max(0.0, 4.0 * B - 3.0 * A * A));
    const double r_minus = 0.5 * (A - spread);
    const double r_plus = 0.5 * (A + spread);
    if (!(r_minus < 0.0 && r_plus > 0.0)) throw SolverError("four_moment_bounded: degenerate fallback nodes");
    const double w_minus = 1.0 / (r_minus * (r_minus - r_plus));
    const double w_plus = 1.0 / (r_plus * (r_plus - r_minus));
    double w_zero = 1.0 - w_minus - w_plus;
    if (w_zero < -1e-12 || !(w_minus > 0.0) || !(w_plus > 0.0)) {
      throw SolverError("four_moment_bounded: fallback produced negative weights");
    }
    if (w_zero < 1e-15) w_zero = 0.0;
    d.atoms.push_back(r_minus);
    d.weights.push_back(w_minus);
    if (w_zero > 0.0) {
      d.atoms.push_back(0.0);
      d.weights.push_back(w_zero);
    }
    d.atoms.push_back(r_plus);
    d.weights.push_back(w_plus);
    out.fallback = true;
  }

  // Renormalize away the last ulp of drift.
  long double total = 0.0L;
  for (double w : d.weights) total += w;
  for (double& w : d.weights) w = static_cast<double>(w / total);
  out.law = EntryDistribution(std::move(d));
  return out;
}

inline EntryDistribution four_moment_bounded(double A, double B) { return four_moment_construction(A, B).law; }

inline EntryDistribution parse_distribution(const std::string& text) {
  return parse_distribution(text, [](double A, double B) { return four_moment_bounded(A, B); });
}

/// Classifies a law by the edge-universality criterion s^4 P(|x| >= s) -> 0.
/// The functional is read at s = 10, ..., 10^4: it must vanish or keep
/// shrinking by at least 10% per decade over the last two decades. A tail
/// like c s^-4 keeps it constant and fails.
inline bool satisfies_tail_criterion(const EntryDistribution& dist) {
  double prev = dist.tail_functional(10.0);
  for (double s : {100.0, 1000.0, 10000.0}) {
    const double cur = dist.tail_functional(s);
    if (cur == 0.0) return true;
    if (s >= 1000.0 && !(cur <= 0.9 * prev)) return false;
    prev = cur;
  }
  return true;
}

/// Wigner ensemble: h_ij = x_ij / sqrt(N), off-diagonal x_ij ~ offdiag,
/// diagonal x_ii ~ diag.
struct EnsembleSpec {
  long N = 100;
  EntryDistribution offdiag = EntryDistribution::gaussian(1.0);
  EntryDistribution diag = EntryDistribution::gaussian(2.0);
  std::uint64_t seed = 0;
  std::string label = "goe";

  static EnsembleSpec goe(long N, std::uint64_t seed = 0) {
    return {N, EntryDistribution::gaussian(1.0), EntryDistribution::gaussian(2.0), seed, "goe"};
  }
};

/// Support scale q; entries are expected to satisfy |h_ij| <= 1/q.
struct SupportBound {
  double q = 1.0;
};

inline Matrix sample_wigner(const EnsembleSpec& spec, CounterRng& rng) {
  if (spec.N < 1) throw std::invalid_argument("sample_wigner: need N >= 1");
  const Eigen::Index n = spec.N;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix H(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    H(j, j) = scale * spec.diag.sample(rng);
    for (Eigen::Index i = 0; i < j; ++i) {
      const double v = scale * spec.offdiag.sample(rng);
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  return H;
}

inline Matrix sample_wigner(const EnsembleSpec& spec) {
  CounterRng rng(spec.seed);
  return sample_wigner(spec, rng);
}

struct SupportCheck {
  bool within = true;
  double max_abs = 0.0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
};

inline SupportCheck check_bounded_support(const Matrix& H, SupportBound bound) {
  if (!(bound.q > 0.0)) throw std::invalid_argument("check_bounded_support: need q > 0");
  SupportCheck out;
  for (Eigen::Index j = 0; j < H.cols(); ++j) {
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
      const double a = std::abs(H(i, j));
      if (a > out.max_abs) {
        out.max_abs = a;
        out.row = i;
        out.col = j;
      }
    }
  }
  out.within = out.max_abs <= 1.0 / bound.q;
  return out;
}

/// Symmetric tridiagonal matrix given by its diagonal and off-diagonal.
struct Tridiagonal {
  Vector diag;
  Vector offdiag;
};

/// Tridiagonal model with the same eigenvalue law as the GOE spec above
/// (off-diagonal variance 1, diagonal variance 2, scaled by N^{-1/2}).
/// Householder reduction of a GOE matrix leaves N(0, 2) on the diagonal and
/// chi_{N-1}, ..., chi_1 on the off-diagonal, independently.
inline Tridiagonal sample_goe_tridiagonal(long N, CounterRng& rng) {
  if (N < 1) throw std::invalid_argument("sample_goe_tridiagonal: need N >= 1");
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  Tridiagonal t{Vector(N), Vector(N > 1 ? N - 1 : 0)};
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0));
  for (long i = 0; i < N; ++i) t.diag(i) = scale * normal(rng);
  for (long k = 1; k < N; ++k) {
    std::chi_squared_distribution<double> chi2(static_cast<double>(N - k));
    t.offdiag(k - 1) = scale * std::sqrt(chi2(rng));
  }
  return t;
}

}  // namespace rmtedge
