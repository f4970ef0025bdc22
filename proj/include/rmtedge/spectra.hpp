#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "rmtedge/ensembles.hpp"
#include "rmtedge/errors.hpp"
#include "rmtedge/semicircle.hpp"

namespace rmtedge {

/// Spectrum of one symmetric matrix: ascending eigenvalues and, optionally,
/// the matching orthonormal eigenvectors as columns.
struct SpectralData {
  Vector eigenvalues;
  std::optional<Matrix> eigenvectors;

  [[nodiscard]] Eigen::Index size() const noexcept { return eigenvalues.size(); }
  [[nodiscard]] bool has_vectors() const noexcept { return eigenvectors.has_value(); }
  [[nodiscard]] double largest() const { return eigenvalues(eigenvalues.size() - 1); }
};

struct GreenEntry {
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  complex value;
};

struct GreenEvaluation {
  SpectralPoint z;
  std::vector<GreenEntry> entries;
  complex trace_avg;
};

namespace detail {

inline double asymmetry(const Matrix& H) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < H.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) worst = std::max(worst, std::abs(H(i, j) - H(j, i)));
  }
  return worst;
}

inline void require_symmetric(const Matrix& H) {
  if (H.rows() != H.cols() || H.rows() == 0) throw std::invalid_argument("eigh: need a nonempty square matrix");
  if (!(asymmetry(H) <= 1e-12)) throw std::invalid_argument("eigh: matrix is not symmetric");
}

inline void check_info(lapack_int info, const char* routine) {
  if (info < 0) throw std::logic_error(std::string(routine) + ": illegal argument " + std::to_string(-info));
  if (info > 0) throw NumericalError(std::string(routine) + ": eigensolver failed to converge");
}

inline void require_vectors(const SpectralData& sd, const char* what) {
  if (!sd.has_vectors()) throw std::invalid_argument(std::string(what) + ": eigenvectors were not computed");
}

}  // namespace detail

/// Full symmetric eigendecomposition (Householder tridiagonalization, then
/// LAPACK's relatively robust representation solver).
inline SpectralData eigh(const Matrix& H, bool want_vectors) {
  detail::require_symmetric(H);
  const lapack_int n = static_cast<lapack_int>(H.rows());
  Matrix a = H;
  SpectralData sd;
  sd.eigenvalues.resize(n);
  lapack_int found = 0;
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  if (want_vectors) {
    Matrix z(n, n);
    const lapack_int info =
        LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'A', 'U', n, a.data(), n, 0.0, 0.0, 0, 0, 0.0, &found,
                       sd.eigenvalues.data(), z.data(), n, support.data());
    detail::check_info(info, "dsyevr");
    sd.eigenvectors = std::move(z);
  } else {
    double dummy = 0.0;
    const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'N', 'A', 'U', n, a.data(), n, 0.0, 0.0, 0, 0, 0.0,
                                           &found, sd.eigenvalues.data(), &dummy, 1, support.data());
    detail::check_info(info, "dsyevr");
  }
  if (found != n) throw NumericalError("dsyevr: returned fewer eigenvalues than requested");
  return sd;
}

/// Largest eigenvalue only. Same reduction as eigh, then bisection for the
/// single top eigenvalue.
inline double largest_eigenvalue(const Matrix& H) {
  detail::require_symmetric(H);
  const lapack_int n = static_cast<lapack_int>(H.rows());
  Matrix a = H;
  lapack_int found = 0;
  double w[1] = {0.0};
  double dummy = 0.0;
  lapack_int support[2] = {0, 0};
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'N', 'I', 'U', n, a.data(), n, 0.0, 0.0, n, n, 0.0,
                                         &found, w, &dummy, 1, support);
  detail::check_info(info, "dsyevr");
  if (found != 1) throw NumericalError("dsyevr: top eigenvalue not found");
  return w[0];
}

/// Largest eigenvalue of a symmetric tridiagonal matrix.
inline double largest_eigenvalue(const Tridiagonal& t) {
  const lapack_int n = static_cast<lapack_int>(t.diag.size());
  if (n == 0) throw std::invalid_argument("largest_eigenvalue: empty tridiagonal matrix");
  if (n == 1) return t.diag(0);
  Vector d = t.diag;
  Vector e = t.offdiag;
  lapack_int found = 0;
  lapack_int nsplit = 0;
  double w[1] = {0.0};
  std::vector<lapack_int> block(static_cast<std::size_t>(n));
  std::vector<lapack_int> split(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dstebz('I', 'E', n, 0.0, 0.0, n, n, 0.0, d.data(), e.data(), &found, &nsplit, w,
                                         block.data(), split.data());
  detail::check_info(info, "dstebz");
  if (found != 1) throw NumericalError("dstebz: top eigenvalue not found");
  return w[0];
}

/// Green function entry G_ij(z) = sum_a u_a(i) u_a(j) / (lambda_a - z).
inline complex green_entry(const SpectralData& sd, Eigen::Index i, Eigen::Index j, const SpectralPoint& z) {
  detail::require_vectors(sd, "green_entry");
  detail::require_upper_half_plane(z);
  const Matrix& U = *sd.eigenvectors;
  if (i < 0 || j < 0 || i >= U.rows() || j >= U.rows()) throw std::out_of_range("green_entry: index out of range");
  const complex zz = z.z();
  complex acc = 0.0;
  for (Eigen::Index a = 0; a < sd.size(); ++a) acc += U(i, a) * U(j, a) / (sd.eigenvalues(a) - zz);
  return acc;
}

/// Normalized trace of the resolvent, m_N(z).
inline complex stieltjes(const SpectralData& sd, const SpectralPoint& z) {
  detail::require_upper_half_plane(z);
  const complex zz = z.z();
  complex acc = 0.0;
  for (Eigen::Index a = 0; a < sd.size(); ++a) acc += 1.0 / (sd.eigenvalues(a) - zz);
  return acc / static_cast<double>(sd.size());
}

inline GreenEvaluation evaluate_green(const SpectralData& sd, const SpectralPoint& z,
                                      const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs) {
  GreenEvaluation out{z, {}, stieltjes(sd, z)};
  out.entries.reserve(pairs.size());
  for (const auto& [i, j] : pairs) out.entries.push_back({i, j, green_entry(sd, i, j, z)});
  return out;
}

/// Normalized counting function #{lambda_j <= E} / N.
inline double counting(const SpectralData& sd, double E) {
  const auto* first = sd.eigenvalues.data();
  const auto* last = first + sd.size();
  return static_cast<double>(std::upper_bound(first, last, E) - first) / static_cast<double>(sd.size());
}

/// N max_{a,i} |u_a(i)|^2; equals 1 for perfectly flat eigenvectors and N
/// for standard basis vectors.
inline double delocalization_stat(const SpectralData& sd) {
  detail::require_vectors(sd, "delocalization_stat");
  return static_cast<double>(sd.size()) * sd.eigenvectors->array().square().maxCoeff();
}

inline double operator_norm(const SpectralData& sd) {
  return std::max(std::abs(sd.eigenvalues(0)), std::abs(sd.largest()));
}

/// Symmetric perturbation with value v at (a, b) and (b, a).
struct PairPerturbation {
  Eigen::Index a = 0;
  Eigen::Index b = 1;
  double value = 0.0;

  [[nodiscard]] Matrix dense(Eigen::Index n) const {
    Matrix V = Matrix::Zero(n, n);
    V(a, b) = value;
    V(b, a) = value;
    return V;
  }
};

/// max-norm of R - sum_{m=0}^{order} (S V)^m S with R = (Q - z)^{-1} and
/// S = (Q + V - z)^{-1}, from dense inverses.
inline double resolvent_expansion_residual(const Matrix& Q, const PairPerturbation& V, const SpectralPoint& z,
                                           int order) {
  detail::require_upper_half_plane(z);
  if (order < 0) throw std::invalid_argument("resolvent_expansion_residual: need order >= 0");
  const Eigen::Index n = Q.rows();
  if (V.a < 0 || V.b < 0 || V.a >= n || V.b >= n) throw std::out_of_range("resolvent_expansion_residual: bad pair");
  using CMatrix = Eigen::MatrixXcd;
  const CMatrix shift = CMatrix::Identity(n, n) * z.z();
  const CMatrix Qc = Q.cast<complex>();
  const CMatrix Vc = V.dense(n).cast<complex>();
  const CMatrix R = (Qc - shift).partialPivLu().inverse();
  const CMatrix S = (Qc + Vc - shift).partialPivLu().inverse();

  CMatrix term = S;
  CMatrix sum = S;
  const CMatrix SV = S * Vc;
  for (int m = 1; m <= order; ++m) {
    term = SV * term;
    sum += term;
  }
  return (R - sum).cwiseAbs().maxCoeff();
}

}  // namespace rmtedge
