#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace rmtedge {

using complex = std::complex<double>;

/// Point z = E + i*eta of the upper half plane.
struct SpectralPoint {
  double E = 0.0;
  double eta = 1.0;

  [[nodiscard]] complex z() const noexcept { return {E, eta}; }
  /// Distance ||E| - 2| to the nearest spectral edge.
  [[nodiscard]] double kappa() const noexcept { return std::abs(std::abs(E) - 2.0); }
};

struct SemicircleValue {
  complex m;
  double rho = 0.0;
  double ncdf = 0.0;
};

namespace detail {
inline void require_upper_half_plane(const SpectralPoint& p) {
  if (!(p.eta > 0.0)) throw std::invalid_argument("spectral point needs eta > 0");
}
}  // namespace detail

/// Stieltjes transform of the semicircle law.
///
/// m solves m^2 + z m + 1 = 0. The two roots multiply to 1, so the larger
/// one is formed directly and the smaller as its reciprocal, which avoids
/// cancellation for large |z|. The root in the upper half plane is returned;
/// the other one is 1/m and lies in the lower half plane.
inline complex msc(const SpectralPoint& p) {
  detail::require_upper_half_plane(p);
  const complex z = p.z();
  const complex disc = std::sqrt(z * z - 4.0);
  const complex a = 0.5 * (-z + disc);
  const complex b = 0.5 * (-z - disc);
  const complex big = std::abs(a) >= std::abs(b) ? a : b;
  const complex small = 1.0 / big;
  return big.imag() > 0.0 ? big : small;
}

/// Semicircle density (1/2pi) sqrt((4 - E^2)_+).
inline double rho_sc(double E) noexcept {
  const double r = 4.0 - E * E;
  return r > 0.0 ? std::sqrt(r) / (2.0 * std::numbers::pi) : 0.0;
}

/// Semicircle distribution function.
inline double n_sc(double E) noexcept {
  if (E <= -2.0) return 0.0;
  if (E >= 2.0) return 1.0;
  const double v = 0.5 + E * std::sqrt(4.0 - E * E) / (4.0 * std::numbers::pi) +
                   std::asin(0.5 * E) / std::numbers::pi;
  return std::clamp(v, 0.0, 1.0);
}

inline SemicircleValue semicircle_at(const SpectralPoint& p) {
  return {msc(p), rho_sc(p.E), n_sc(p.E)};
}

/// Classical location gamma_j: the solution of N n_sc(gamma_j) = j.
///
/// Bisection on [-2, 2]; the density vanishes at both edges, so Newton is
/// not used.
inline double classical_location(long j, long N) {
  if (N < 1 || j < 1 || j > N) throw std::invalid_argument("classical_location: need 1 <= j <= N");
  if (j == N) return 2.0;
  const double target = static_cast<double>(j) / static_cast<double>(N);
  double lo = -2.0;
  double hi = 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (n_sc(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace rmtedge
