#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "rmtedge/distributions.hpp"
#include "rmtedge/rng.hpp"

namespace rmtedge {

/// Empirical CDF of a sample.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> sample) : x_(std::move(sample)) {
    if (x_.empty()) throw std::invalid_argument("Ecdf: empty sample");
    std::sort(x_.begin(), x_.end());
  }

  /// #{x_i <= t} / n; right-continuous.
  [[nodiscard]] double operator()(double t) const {
    const auto k = std::upper_bound(x_.begin(), x_.end(), t) - x_.begin();
    return static_cast<double>(k) / static_cast<double>(x_.size());
  }

  [[nodiscard]] std::size_t size() const noexcept { return x_.size(); }
  [[nodiscard]] const std::vector<double>& sorted() const noexcept { return x_; }

 private:
  std::vector<double> x_;
};

/// sup_t |F_n(t) - F(t)| for a continuous reference F, evaluated on both
/// sides of every jump.
template <class Cdf>
double ks_one_sample(std::vector<double> sample, Cdf&& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

/// sup_t |F_a(t) - F_b(t)|; ties within and across samples are stepped over
/// together, so the statistic is symmetric in its arguments.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Once one sample is exhausted the gap only shrinks.
  return d;
}

/// Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly; Q = 1 to double precision
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// p-value of a KS distance d with effective size n_eff (n for one sample,
/// nm/(n+m) for two), using Stephens' small-sample correction.
inline double ks_pvalue(double d, double n_eff) {
  if (!(n_eff > 0.0)) throw std::invalid_argument("ks_pvalue: need n_eff > 0");
  const double r = std::sqrt(n_eff);
  return kolmogorov_survival((r + 0.12 + 0.11 / r) * d);
}

/// Raw and central moments up to order 4 with jackknife standard errors.
/// Index k holds the k-th moment; index 0 is unused.
struct MomentEstimates {
  std::size_t n = 0;
  std::array<double, 5> raw{};
  std::array<double, 5> raw_se{};
  std::array<double, 5> central{};
  std::array<double, 5> central_se{};

  [[nodiscard]] double mean() const noexcept { return raw[1]; }
  [[nodiscard]] double variance() const noexcept { return central[2]; }
};

namespace detail {

// Central moments 2..4 from power sums of data already shifted by c.
inline std::array<double, 5> central_from_sums(const std::array<long double, 5>& S, long double n) {
  const long double m1 = S[1] / n;
  const long double m2 = S[2] / n;
  const long double m3 = S[3] / n;
  const long double m4 = S[4] / n;
  std::array<double, 5> c{};
  c[1] = 0.0;
  c[2] = static_cast<double>(m2 - m1 * m1);
  c[3] = static_cast<double>(m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1);
  c[4] = static_cast<double>(m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1 * m1 * m1 * m1);
  return c;
}

}  // namespace detail

inline MomentEstimates moment_estimates(const std::vector<double>& sample) {
  const std::size_t n = sample.size();
  if (n < 2) throw std::invalid_argument("moment_estimates: need at least two values");
  MomentEstimates out;
  out.n = n;
  const long double ln = static_cast<long double>(n);

  // Power sums of the raw data and of the data shifted by its mean.
  std::array<long double, 5> raw_sums{};
  for (double x : sample) {
    long double p = 1.0L;
    for (int k = 1; k <= 4; ++k) {
      p *= x;
      raw_sums[k] += p;
    }
  }
  const long double shift = raw_sums[1] / ln;
  std::array<long double, 5> sums{};
  for (double x : sample) {
    const long double y = x - shift;
    long double p = 1.0L;
    for (int k = 1; k <= 4; ++k) {
      p *= y;
      sums[k] += p;
    }
  }
  for (int k = 1; k <= 4; ++k) out.raw[k] = static_cast<double>(raw_sums[k] / ln);
  out.central = detail::central_from_sums(sums, ln);
  out.central[1] = 0.0;

  // Leave-one-out replicates from the power sums, O(n) in total.
  std::array<long double, 5> raw_acc{}, raw_acc2{}, cen_acc{}, cen_acc2{};
  for (double x : sample) {
    const long double y = x - shift;
    std::array<long double, 5> rs = raw_sums;
    std::array<long double, 5> cs = sums;
    long double px = 1.0L;
    long double py = 1.0L;
    for (int k = 1; k <= 4; ++k) {
      px *= x;
      py *= y;
      rs[k] -= px;
      cs[k] -= py;
    }
    const auto c = detail::central_from_sums(cs, ln - 1);
    for (int k = 1; k <= 4; ++k) {
      const long double r = rs[k] / (ln - 1);
      raw_acc[k] += r;
      raw_acc2[k] += r * r;
      cen_acc[k] += c[k];
      cen_acc2[k] += static_cast<long double>(c[k]) * c[k];
    }
  }
  const long double factor = (ln - 1) / ln;
  for (int k = 1; k <= 4; ++k) {
    // Jackknife variance: (n - 1)/n * sum (theta_i - theta_bar)^2.
    const long double rv = raw_acc2[k] - raw_acc[k] * raw_acc[k] / ln;
    const long double cv = cen_acc2[k] - cen_acc[k] * cen_acc[k] / ln;
    out.raw_se[k] = static_cast<double>(std::sqrt(std::max(0.0L, factor * rv)));
    out.central_se[k] = k == 1 ? out.raw_se[1] : static_cast<double>(std::sqrt(std::max(0.0L, factor * cv)));
  }
  return out;
}

/// Growth of the fourth-moment estimate with sample size. The sample is cut
/// into disjoint blocks of sizes 64, 128, ...; the median of the block
/// estimates of E x^4 at each size is regressed on the size in log-log
/// scale. A finite fourth moment gives slope ~0; a divergent one makes the
/// estimate grow without bound.
struct DivergenceDiagnostic {
  std::vector<double> block_sizes;
  std::vector<double> estimates;
  double slope = 0.0;
  bool flagged = false;
};

inline DivergenceDiagnostic fourth_moment_divergence(const std::vector<double>& sample, double slope_threshold = 0.085) {
  constexpr std::size_t kMinBlock = 64;
  if (sample.size() < 4 * kMinBlock) throw std::invalid_argument("fourth_moment_divergence: need >= 256 values");
  DivergenceDiagnostic out;
  for (std::size_t m = kMinBlock; 4 * m <= sample.size(); m *= 2) {
    std::vector<double> block_means;
    for (std::size_t start = 0; start + m <= sample.size(); start += m) {
      long double acc = 0.0L;
      for (std::size_t i = start; i < start + m; ++i) {
        const long double x2 = static_cast<long double>(sample[i]) * sample[i];
        acc += x2 * x2;
      }
      block_means.push_back(static_cast<double>(acc / m));
    }
    auto mid = block_means.begin() + static_cast<std::ptrdiff_t>(block_means.size() / 2);
    std::nth_element(block_means.begin(), mid, block_means.end());
    out.block_sizes.push_back(static_cast<double>(m));
    out.estimates.push_back(*mid);
  }
  const std::size_t k = out.block_sizes.size();
  if (k >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double lx = std::log(out.block_sizes[i]);
      const double ly = std::log(out.estimates[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    out.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  }
  out.flagged = out.slope > slope_threshold;
  return out;
}

/// Nearest-rank empirical quantile: the smallest sample value v with
/// #{x <= v} >= p n.
inline double empirical_quantile(std::vector<double> sample, double p) {
  if (sample.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("empirical_quantile: need 0 < p <= 1");
  const auto n = sample.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(rank - 1), sample.end());
  return sample[rank - 1];
}

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
  [[nodiscard]] bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

/// Two-sided standard normal critical value for confidence `level`.
inline double normal_critical(double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("normal_critical: need 0 < level < 1");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

/// Wilson score interval for a binomial proportion.
inline Interval binomial_ci(std::size_t successes, std::size_t trials, double level = 0.95) {
  if (trials == 0) throw std::invalid_argument("binomial_ci: need trials >= 1");
  if (successes > trials) throw std::invalid_argument("binomial_ci: successes exceed trials");
  const double z = normal_critical(level);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) ci.lower = 0.0;
  if (successes == trials) ci.upper = 1.0;
  return ci;
}

/// phi = (log N)^{log log N} and the envelope phi^C.
struct PolylogScale {
  double N = 16.0;
  double C = 2.0;

  [[nodiscard]] double phi() const {
    if (!(N > std::exp(1.0))) throw std::invalid_argument("PolylogScale: need N > e");
    const double l = std::log(N);
    return std::pow(l, std::log(l));
  }
  [[nodiscard]] double envelope() const { return std::pow(phi(), C); }
};

/// Monte Carlo value with its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// s^4 P(|x| >= s) from `samples` draws, for laws without a closed form.
inline Estimate estimate_tail_functional(const EntryDistribution& dist, double s, std::size_t samples,
                                         CounterRng& rng) {
  if (!(s > 0.0) || samples == 0) throw std::invalid_argument("estimate_tail_functional: bad arguments");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) hits += std::abs(dist.sample(rng)) >= s;
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  const double s4 = s * s * s * s;
  return {s4 * p, s4 * std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

}  // namespace rmtedge
