#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "rmtedge/distributions.hpp"
#include "rmtedge/ensembles.hpp"
#include "rmtedge/parallel.hpp"
#include "rmtedge/rng.hpp"
#include "rmtedge/spectra.hpp"

namespace rmtedge {

/// Truncation of an entry law at T = N^{1/2 - epsilon}.
struct CutoffParams {
  long N = 0;
  double epsilon = 0.0;
  double threshold = 0.0;
  double alpha = 0.0;       // P(|x| > T), off-diagonal law
  double beta = 0.0;        // E[1(|x| > T) x], off-diagonal law
  double alpha_diag = 0.0;  // same for the diagonal law
  double beta_diag = 0.0;
};

inline CutoffParams cutoff_params(const EntryDistribution& offdiag, const EntryDistribution& diag, long N,
                                  double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("cutoff_params: need 0 < epsilon < 1/2");
  if (N < 1) throw std::invalid_argument("cutoff_params: need N >= 1");
  CutoffParams p;
  p.N = N;
  p.epsilon = epsilon;
  p.threshold = std::pow(static_cast<double>(N), 0.5 - epsilon);
  p.alpha = offdiag.strict_tail_probability(p.threshold);
  p.beta = offdiag.truncated_mean(p.threshold);
  p.alpha_diag = diag.strict_tail_probability(p.threshold);
  p.beta_diag = diag.truncated_mean(p.threshold);
  return p;
}

inline CutoffParams cutoff_params(const EntryDistribution& dist, long N, double epsilon) {
  return cutoff_params(dist, dist, N, epsilon);
}

/// One entry split into a small part, a large part and an indicator,
/// x = small (1 - c) + large c + beta.
///
/// When |beta| dwarfs |x| no double y has y + beta == x (sums near zero land
/// on the ulp(beta) grid); `residual` then carries the exact remainder
/// x - (y + beta), and is zero otherwise.
struct CutoffDecomposition {
  std::optional<double> small;
  std::optional<double> large;
  bool indicator = false;
  double beta = 0.0;
  double residual = 0.0;

  [[nodiscard]] double reconstruct() const {
    const double part = indicator ? large.value() : small.value();
    return (part + beta) + residual;
  }
};

namespace detail {
// Closest double y to x - beta with y + beta == x in floating point, so the
// split reconstructs every draw bit for bit.
inline double exact_shift(double x, double beta) {
  double y = x - beta;
  if (y + beta == x) return y;
  for (int k = 0; k < 64; ++k) {
    const double up = std::nextafter(y, std::numeric_limits<double>::infinity());
    const double down = std::nextafter(y, -std::numeric_limits<double>::infinity());
    if (up + beta == x) return up;
    if (down + beta == x) return down;
    y = (y + beta < x) ? up : down;
  }
  return x - beta;
}
}  // namespace detail

inline CutoffDecomposition split_sample(double x, double threshold, double beta) {
  CutoffDecomposition d;
  d.beta = beta;
  d.indicator = std::abs(x) > threshold;
  const double shifted = detail::exact_shift(x, beta);
  d.residual = x - (shifted + beta);
  if (d.indicator) {
    d.large = shifted;
  } else {
    d.small = shifted;
  }
  return d;
}

inline CutoffDecomposition split_sample(double x, const CutoffParams& params) {
  return split_sample(x, params.threshold, params.beta);
}

/// As above; when the indicator is set, the small part is filled with an
/// independent draw from the truncated law, so every entry has one.
inline CutoffDecomposition split_sample(double x, double threshold, double beta, const EntryDistribution& dist,
                                        CounterRng& rng) {
  CutoffDecomposition d = split_sample(x, threshold, beta);
  if (d.indicator) d.small = dist.sample_below(threshold, rng) - beta;
  return d;
}

/// Nonzero entry of a symmetric perturbation; row <= col.
struct PerturbationEntry {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double value = 0.0;
};

/// E = V D V^T for a symmetric E whose nonzero entries sit on pairwise
/// disjoint index sets. Each off-diagonal pair {i, j} contributes columns
/// (e_i + e_j)/sqrt(2), (e_i - e_j)/sqrt(2) with D entries E_ij, -E_ij; each
/// diagonal entry contributes e_i with D entry E_ii. Pairs come first.
class LowRankPerturbation {
 public:
  struct Column {
    Eigen::Index index[2] = {0, 0};
    double coef[2] = {0.0, 0.0};
    int nnz = 1;
  };

  LowRankPerturbation() = default;

  LowRankPerturbation(Eigen::Index n, std::vector<PerturbationEntry> entries) : n_(n) {
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    auto claim = [&](Eigen::Index k) {
      if (k < 0 || k >= n) throw std::out_of_range("build_low_rank: index out of range");
      if (used[static_cast<std::size_t>(k)]) throw std::invalid_argument("build_low_rank: overlapping index pairs");
      used[static_cast<std::size_t>(k)] = 1;
    };
    std::vector<PerturbationEntry> pairs;
    std::vector<PerturbationEntry> singles;
    for (auto e : entries) {
      if (e.row > e.col) std::swap(e.row, e.col);
      if (e.value == 0.0) throw std::invalid_argument("build_low_rank: zero entries carry no rank");
      claim(e.row);
      if (e.row != e.col) {
        claim(e.col);
        pairs.push_back(e);
      } else {
        singles.push_back(e);
      }
    }
    const double r = 1.0 / std::sqrt(2.0);
    for (const auto& e : pairs) {
      columns_.push_back({{e.row, e.col}, {r, r}, 2});
      d_.push_back(e.value);
      columns_.push_back({{e.row, e.col}, {r, -r}, 2});
      d_.push_back(-e.value);
    }
    for (const auto& e : singles) {
      columns_.push_back({{e.row, e.row}, {1.0, 0.0}, 1});
      d_.push_back(e.value);
    }
    pairs_ = pairs.size();
    singles_ = singles.size();
    entries_ = std::move(pairs);
    entries_.insert(entries_.end(), singles.begin(), singles.end());
  }

  [[nodiscard]] Eigen::Index n() const noexcept { return n_; }
  [[nodiscard]] Eigen::Index rank() const noexcept { return static_cast<Eigen::Index>(columns_.size()); }
  [[nodiscard]] std::size_t pair_count() const noexcept { return pairs_; }
  [[nodiscard]] std::size_t diagonal_count() const noexcept { return singles_; }
  [[nodiscard]] const std::vector<Column>& columns() const noexcept { return columns_; }
  [[nodiscard]] const std::vector<PerturbationEntry>& entries() const noexcept { return entries_; }

  [[nodiscard]] Vector D(double gamma = 1.0) const {
    Vector d(rank());
    for (Eigen::Index k = 0; k < rank(); ++k) d(k) = gamma * d_[static_cast<std::size_t>(k)];
    return d;
  }

  [[nodiscard]] Matrix V() const {
    Matrix v = Matrix::Zero(n_, rank());
    for (Eigen::Index k = 0; k < rank(); ++k) {
      const auto& c = columns_[static_cast<std::size_t>(k)];
      for (int t = 0; t < c.nnz; ++t) v(c.index[t], k) = c.coef[t];
    }
    return v;
  }

  /// Dense E assembled directly from the entries.
  [[nodiscard]] Matrix dense() const {
    Matrix e = Matrix::Zero(n_, n_);
    for (const auto& x : entries_) {
      e(x.row, x.col) = x.value;
      e(x.col, x.row) = x.value;
    }
    return e;
  }

  /// V D V^T.
  [[nodiscard]] Matrix reconstruct() const {
    const Matrix v = V();
    return v * D().asDiagonal() * v.transpose();
  }

 private:
  Eigen::Index n_ = 0;
  std::vector<Column> columns_;
  std::vector<double> d_;
  std::vector<PerturbationEntry> entries_;
  std::size_t pairs_ = 0;
  std::size_t singles_ = 0;
};

inline LowRankPerturbation build_low_rank(Eigen::Index n, std::vector<PerturbationEntry> entries) {
  return LowRankPerturbation(n, std::move(entries));
}

/// V^T G^S(mu) V + (gamma D)^{-1}, using the eigendecomposition of H^S.
inline Matrix secular_matrix(const SpectralData& sdS, const LowRankPerturbation& pert, double mu, double gamma = 1.0) {
  detail::require_vectors(sdS, "secular_matrix");
  for (Eigen::Index a = 0; a < sdS.size(); ++a) {
    if (std::abs(sdS.eigenvalues(a) - mu) <= 1e-12) {
      throw std::invalid_argument("secular_matrix: mu coincides with an eigenvalue of H^S");
    }
  }
  const Vector d = pert.D(gamma);
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (d(k) == 0.0) throw std::invalid_argument("secular_matrix: D has a zero entry");
  }
  const Matrix& U = *sdS.eigenvectors;
  // W = V^T U, read off the sparse columns of V.
  Matrix W(pert.rank(), sdS.size());
  for (Eigen::Index k = 0; k < pert.rank(); ++k) {
    const auto& c = pert.columns()[static_cast<std::size_t>(k)];
    W.row(k) = c.coef[0] * U.row(c.index[0]);
    if (c.nnz == 2) W.row(k) += c.coef[1] * U.row(c.index[1]);
  }
  const Vector inv_shift = (sdS.eigenvalues.array() - mu).inverse().matrix();
  Matrix M = W * inv_shift.asDiagonal() * W.transpose();
  M.diagonal() += d.cwiseInverse();
  return M;
}

struct SecularResidual {
  double sigma_min = 0.0;  // smallest singular value of the secular matrix
  // Size of the summands |D^{-1}| + sum_a |W e_a|^2 / |lambda_a - mu|. Rounding
  // in the sum is relative to this, not to the (possibly cancelled) result.
  double scale = 0.0;
  [[nodiscard]] bool is_root(double rel_tol = 1e-8) const { return sigma_min <= rel_tol * scale; }
};

inline SecularResidual secular_residual_detail(const SpectralData& sdS, const LowRankPerturbation& pert, double mu,
                                               double gamma = 1.0) {
  const Matrix M = secular_matrix(sdS, pert, mu, gamma);
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  double scale = pert.D(gamma).cwiseInverse().cwiseAbs().maxCoeff();
  const Matrix& U = *sdS.eigenvectors;
  for (Eigen::Index a = 0; a < sdS.size(); ++a) {
    double w2 = 0.0;
    for (const auto& c : pert.columns()) {
      double w = c.coef[0] * U(c.index[0], a);
      if (c.nnz == 2) w += c.coef[1] * U(c.index[1], a);
      w2 += w * w;
    }
    scale += w2 / std::abs(sdS.eigenvalues(a) - mu);
  }
  return {s(s.size() - 1), scale};
}

/// Smallest singular value of V^T G^S(mu) V + D^{-1}; vanishes exactly when
/// mu is an eigenvalue of H^S + E that is not an eigenvalue of H^S.
inline double secular_residual(const SpectralData& sdS, const LowRankPerturbation& pert, double mu) {
  return secular_residual_detail(sdS, pert, mu).sigma_min;
}

namespace detail {
inline int negative_count(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  int neg = 0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) neg += es.eigenvalues()(k) < 0.0;
  return neg;
}
}  // namespace detail

/// Roots of the secular equation for H^S + gamma E, found from the inertia
/// of the secular matrix. Between consecutive eigenvalues of H^S the matrix
/// is increasing in mu, so the number of negative eigenvalues drops by one
/// at each root; roots are located by bisection on that count. Roots closer
/// than `pole_gap` to an eigenvalue of H^S are not resolved.
inline std::vector<double> secular_roots(const SpectralData& sdS, const LowRankPerturbation& pert, double gamma = 1.0,
                                         double pole_gap = 1e-9) {
  detail::require_vectors(sdS, "secular_roots");
  if (pert.rank() == 0) return {};
  const Vector d = pert.D(gamma);
  const double reach = d.cwiseAbs().maxCoeff() + 1.0;
  const Vector& lam = sdS.eigenvalues;
  std::vector<double> edges;
  edges.push_back(lam(0) - reach);
  for (Eigen::Index a = 0; a < lam.size(); ++a) edges.push_back(lam(a));
  edges.push_back(lam(lam.size() - 1) + reach);

  auto neg_at = [&](double mu) { return detail::negative_count(secular_matrix(sdS, pert, mu, gamma)); };

  std::vector<double> roots;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double a = edges[k] + (k == 0 ? 0.0 : pole_gap);
    const double b = edges[k + 1] - (k + 2 == edges.size() ? 0.0 : pole_gap);
    if (!(b > a)) continue;
    const int na = neg_at(a);
    const int nb = neg_at(b);
    // Recursive bisection splitting the count difference.
    struct Bracket {
      double lo, hi;
      int nlo, nhi;
    };
    std::vector<Bracket> work{{a, b, na, nb}};
    while (!work.empty()) {
      Bracket br = work.back();
      work.pop_back();
      if (br.nlo <= br.nhi) continue;
      if (br.hi - br.lo <= 1e-14 * std::max(1.0, std::abs(br.lo))) {
        for (int r = 0; r < br.nlo - br.nhi; ++r) roots.push_back(0.5 * (br.lo + br.hi));
        continue;
      }
      const double mid = 0.5 * (br.lo + br.hi);
      const int nm = neg_at(mid);
      work.push_back({br.lo, mid, br.nlo, nm});
      work.push_back({mid, br.hi, nm, br.nhi});
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Witness pair for lambda_N >= 3: |h_ij| >= 4 with |h_ii|, |h_jj| < 1. The
/// Rayleigh quotient of u = (e_i + sgn(h_ij) e_j)/sqrt(2) gives the bound.
struct NecessityWitness {
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double bound = 0.0;
};

inline std::optional<NecessityWitness> necessity_witness(const Matrix& H) {
  std::optional<NecessityWitness> best;
  const Eigen::Index n = H.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(std::abs(H(j, j)) < 1.0)) continue;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double h = H(i, j);
      if (std::abs(h) >= 4.0 && std::abs(H(i, i)) < 1.0) {
        const double bound = std::abs(h) + 0.5 * (H(i, i) + H(j, j));
        if (!best || bound > best->bound) best = NecessityWitness{i, j, bound};
      }
    }
  }
  return best;
}

/// Top `k` eigenvalues in ascending order.
inline Vector top_eigenvalues(const Matrix& H, int k) {
  detail::require_symmetric(H);
  const lapack_int n = static_cast<lapack_int>(H.rows());
  k = std::min<int>(k, n);
  Matrix a = H;
  Vector w(n);
  lapack_int found = 0;
  double dummy = 0.0;
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'N', 'I', 'U', n, a.data(), n, 0.0, 0.0, n - k + 1, n,
                                         0.0, &found, w.data(), &dummy, 1, support.data());
  detail::check_info(info, "dsyevr");
  if (found != k) throw NumericalError("dsyevr: wrong number of top eigenvalues");
  return w.head(k);
}

/// H^S and E for one tracking trial.
struct CutoffSplitMatrix {
  Matrix small;
  LowRankPerturbation perturbation;
  std::size_t large_entries = 0;   // entries with |x| > T
  std::size_t dropped_large = 0;   // removed by the |E_ij| <= 3/4 cap or the N^{5 eps} count cap
  std::size_t collisions = 0;      // large entries moved to a disjoint slot
};

/// Samples a Wigner matrix entrywise, splits every entry at T, and keeps
/// the small parts as H^S. The large-minus-small differences at positions
/// with the indicator set form E after the |E_ij| <= 3/4 cutoff; positions
/// that overlap an earlier one are re-drawn uniformly among disjoint slots.
inline CutoffSplitMatrix sample_cutoff_split(const EnsembleSpec& spec, double epsilon, CounterRng& rng) {
  const CutoffParams p = cutoff_params(spec.offdiag, spec.diag, spec.N, epsilon);
  const Eigen::Index n = spec.N;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  CutoffSplitMatrix out;
  out.small.resize(n, n);
  std::vector<PerturbationEntry> candidates;

  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const bool diagonal = i == j;
      const EntryDistribution& dist = diagonal ? spec.diag : spec.offdiag;
      const double beta = diagonal ? p.beta_diag : p.beta;
      const double x = dist.sample(rng);
      const CutoffDecomposition d = split_sample(x, p.threshold, beta, dist, rng);
      const double hs = scale * d.small.value();
      out.small(i, j) = hs;
      out.small(j, i) = hs;
      if (d.indicator) {
        ++out.large_entries;
        const double diff = scale * (d.large.value() - d.small.value());
        if (std::abs(diff) <= 0.75) {
          candidates.push_back({i, j, diff});
        } else {
          ++out.dropped_large;
        }
      }
    }
  }

  const auto cap = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 5.0 * epsilon)));
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::size_t free_count = static_cast<std::size_t>(n);
  std::vector<PerturbationEntry> kept;
  for (auto c : candidates) {
    if (kept.size() >= cap || c.value == 0.0) {
      ++out.dropped_large;
      continue;
    }
    const std::size_t need = c.row == c.col ? 1 : 2;
    const bool clash = used[static_cast<std::size_t>(c.row)] || used[static_cast<std::size_t>(c.col)];
    if (clash) {
      if (free_count < need) {
        ++out.dropped_large;
        continue;
      }
      ++out.collisions;
      auto draw_free = [&] {
        for (;;) {
          const auto k = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
          if (!used[static_cast<std::size_t>(k)]) return k;
        }
      };
      const Eigen::Index a = draw_free();
      Eigen::Index b = a;
      if (need == 2) {
        used[static_cast<std::size_t>(a)] = 1;
        b = draw_free();
        used[static_cast<std::size_t>(a)] = 0;
      }
      c.row = std::min(a, b);
      c.col = std::max(a, b);
    }
    used[static_cast<std::size_t>(c.row)] = 1;
    used[static_cast<std::size_t>(c.col)] = 1;
    free_count -= need;
    kept.push_back(c);
  }
  out.perturbation = build_low_rank(n, std::move(kept));
  return out;
}

struct TrackingTrial {
  long N = 0;
  double lambda_max = 0.0;  // top eigenvalue of H^S
  double mu_max = 0.0;      // top eigenvalue of H^S + E
  double gap = 0.0;         // |lambda_max - mu_max|
  bool gap_ok = false;      // gap <= N^{-3/4}
  bool spacing_ok = false;  // lambda_N - lambda_{N-1} >= 2 N^{-3/4} for H^S
  long rank_E = 0;
  std::size_t collisions = 0;
  std::size_t dropped_large = 0;
};

inline TrackingTrial tracking_trial(const EnsembleSpec& spec, double epsilon, CounterRng& rng) {
  const CutoffSplitMatrix split = sample_cutoff_split(spec, epsilon, rng);
  TrackingTrial t;
  t.N = spec.N;
  const Vector top = top_eigenvalues(split.small, 2);
  t.lambda_max = top(top.size() - 1);
  const double scale = std::pow(static_cast<double>(spec.N), -0.75);
  t.spacing_ok = top.size() < 2 || top(1) - top(0) >= 2.0 * scale;
  t.rank_E = static_cast<long>(split.perturbation.rank());
  t.mu_max = t.rank_E == 0 ? t.lambda_max : largest_eigenvalue(Matrix(split.small + split.perturbation.dense()));
  t.gap = std::abs(t.lambda_max - t.mu_max);
  t.gap_ok = t.gap <= scale;
  t.collisions = split.collisions;
  t.dropped_large = split.dropped_large;
  return t;
}

struct TrackingSummary {
  std::vector<TrackingTrial> trials;
  double frequency_gap_ok = 0.0;       // over all trials
  double frequency_gap_ok_spaced = 0.0;  // over trials satisfying the spacing guard
  std::size_t spacing_violations = 0;
  std::size_t collisions = 0;
};

/// Empirical law of |lambda_N(H^S) - lambda_N(H^S + E)| over independent
/// trials; trial t uses the substream trial_stream(seed, t).
inline TrackingSummary eigenvalue_tracking(const EnsembleSpec& spec, double epsilon, std::size_t trials,
                                           unsigned threads = 1) {
  TrackingSummary s;
  s.trials = run_trials(trials, threads, [&](std::size_t t) {
    CounterRng rng = trial_stream(spec.seed, t);
    return tracking_trial(spec, epsilon, rng);
  });
  std::size_t ok = 0;
  std::size_t ok_spaced = 0;
  std::size_t spaced = 0;
  for (const auto& t : s.trials) {
    ok += t.gap_ok;
    if (t.spacing_ok) {
      ++spaced;
      ok_spaced += t.gap_ok;
    } else {
      ++s.spacing_violations;
    }
    s.collisions += t.collisions;
  }
  if (!s.trials.empty()) s.frequency_gap_ok = static_cast<double>(ok) / static_cast<double>(s.trials.size());
  if (spaced) s.frequency_gap_ok_spaced = static_cast<double>(ok_spaced) / static_cast<double>(spaced);
  return s;
}

}  // namespace rmtedge
