#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "rmtedge/decomposition.hpp"

using namespace rmtedge;

namespace {

Matrix goe(long N, std::uint64_t seed) {
  CounterRng rng(seed);
  return sample_wigner(EnsembleSpec::goe(N), rng);
}

// Random disjoint perturbation with `pairs` off-diagonal and `singles`
// diagonal entries, magnitudes in [0.2, 1.5].
LowRankPerturbation random_perturbation(long n, int pairs, int singles, CounterRng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (long k = 0; k < n; ++k) idx[static_cast<std::size_t>(k)] = k;
  for (long k = n - 1; k > 0; --k) std::swap(idx[static_cast<std::size_t>(k)], idx[rng() % static_cast<std::uint64_t>(k + 1)]);
  std::vector<PerturbationEntry> e;
  std::size_t at = 0;
  auto magnitude = [&] { return rng.sign() * (0.2 + 1.3 * rng.uniform_open()); };
  for (int p = 0; p < pairs; ++p, at += 2) e.push_back({idx[at], idx[at + 1], magnitude()});
  for (int s = 0; s < singles; ++s, ++at) e.push_back({idx[at], idx[at], magnitude()});
  return build_low_rank(n, e);
}

}  // namespace

TEST(CutoffParams, Gaussian) {
  const CutoffParams p = cutoff_params(EntryDistribution::gaussian(1.0), 10000, 0.1);
  EXPECT_NEAR(p.threshold, std::pow(10.0, 1.6), 1e-10);
  EXPECT_NEAR(p.threshold, 39.8, 0.02);
  EXPECT_LT(p.alpha, 1e-100);
  EXPECT_EQ(p.beta, 0.0);
}

TEST(CutoffParams, ParetoTail) {
  const CutoffParams p = cutoff_params(EntryDistribution::pareto_sym(4.0), 10000, 0.1);
  const double s0 = std::sqrt(0.5);
  EXPECT_NEAR(p.alpha / (std::pow(s0, 4) * std::pow(10000.0, -1.6)), 1.0, 1e-12);
  EXPECT_EQ(p.beta, 0.0);  // symmetric law
}

TEST(CutoffParams, RademacherHasNoLargePart) {
  const CutoffParams p = cutoff_params(EntryDistribution::rademacher(), 100, 0.25);
  EXPECT_NEAR(p.threshold, std::sqrt(10.0), 1e-12);
  EXPECT_EQ(p.alpha, 0.0);
  EXPECT_EQ(p.beta, 0.0);
}

TEST(CutoffParams, AsymmetricAtomBeyondThreshold) {
  // Atom at 3 with mass 0.1 and T = 2: alpha = 0.1, beta = 0.3.
  const auto d = EntryDistribution::discrete({-1.0 / 3.0, 3.0}, {0.9, 0.1});
  const CutoffParams p = cutoff_params(d, 16, 0.25);
  EXPECT_DOUBLE_EQ(p.threshold, 2.0);
  EXPECT_NEAR(p.alpha, 0.1, 1e-15);
  EXPECT_NEAR(p.beta, 0.3, 1e-15);
}

TEST(CutoffParams, RejectsBadEpsilon) {
  const auto g = EntryDistribution::gaussian(1.0);
  EXPECT_THROW(cutoff_params(g, 100, 0.0), std::invalid_argument);
  EXPECT_THROW(cutoff_params(g, 100, 0.5), std::invalid_argument);
  EXPECT_THROW(cutoff_params(g, 0, 0.1), std::invalid_argument);
}

TEST(SplitSample, Examples) {
  const CutoffDecomposition a = split_sample(0.3, 1.0, 0.0);
  EXPECT_FALSE(a.indicator);
  EXPECT_EQ(a.small.value(), 0.3);
  EXPECT_FALSE(a.large.has_value());
  const CutoffDecomposition b = split_sample(5.0, 1.0, 0.0);
  EXPECT_TRUE(b.indicator);
  EXPECT_EQ(b.large.value(), 5.0);
  EXPECT_FALSE(b.small.has_value());
  // |x| == T stays small.
  EXPECT_FALSE(split_sample(-1.0, 1.0, 0.0).indicator);
}

TEST(SplitSample, ReconstructsBitForBit) {
  CounterRng rng(31);
  for (int k = 0; k < 100000; ++k) {
    const double x = (rng.uniform_open() - 0.5) * std::pow(10.0, 8.0 * rng.uniform_open() - 4.0);
    const double beta = (rng.uniform_open() - 0.5) * std::pow(10.0, 6.0 * rng.uniform_open() - 5.0);
    const double T = 2.0 * rng.uniform_open();
    ASSERT_EQ(split_sample(x, T, beta).reconstruct(), x) << x << " " << beta;
  }
}

TEST(SplitSample, ResidualOnlyWhenShiftDominates) {
  EXPECT_EQ(split_sample(0.7, 1.0, 1e-3).residual, 0.0);
  const CutoffDecomposition d = split_sample(3.7517373695154397e-05, 1.0, 0.71918074041433144);
  EXPECT_NE(d.residual, 0.0);
  EXPECT_LT(std::abs(d.residual), 1e-16);
  EXPECT_EQ(d.reconstruct(), 3.7517373695154397e-05);
}

TEST(SplitSample, SmallPartOfParetoIsCentredWithVarianceBelowOne) {
  const auto d = EntryDistribution::pareto_sym(4.5);
  const CutoffParams p = cutoff_params(d, 100, 0.1);
  CounterRng rng(32);
  const int n = 200000;
  double s1 = 0.0;
  double s2 = 0.0;
  int large = 0;
  for (int k = 0; k < n; ++k) {
    const CutoffDecomposition c = split_sample(d.sample(rng), p.threshold, p.beta, d, rng);
    ASSERT_TRUE(c.small.has_value());
    ASSERT_LE(std::abs(c.small.value() + c.beta), p.threshold);
    s1 += c.small.value();
    s2 += c.small.value() * c.small.value();
    large += c.indicator;
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  EXPECT_LE(std::abs(mean), 5.0 / std::sqrt(n));
  EXPECT_LT(var, 1.0);
  EXPECT_GT(var, 0.9);
  const double se = std::sqrt(p.alpha * (1 - p.alpha) / n);
  EXPECT_NEAR(static_cast<double>(large) / n, p.alpha, 5.0 * se);
}

TEST(LowRank, PairAndDiagonalEntries) {
  const LowRankPerturbation pert = build_low_rank(6, {{4, 1, 0.5}, {2, 2, -0.7}});
  EXPECT_EQ(pert.rank(), 3);
  EXPECT_EQ(pert.pair_count(), 1u);
  EXPECT_EQ(pert.diagonal_count(), 1u);
  const Vector d = pert.D();
  EXPECT_EQ(d(0), 0.5);
  EXPECT_EQ(d(1), -0.5);
  EXPECT_EQ(d(2), -0.7);
  const Matrix E = pert.dense();
  EXPECT_EQ(E(1, 4), 0.5);
  EXPECT_EQ(E(4, 1), 0.5);
  EXPECT_EQ(E(2, 2), -0.7);
  EXPECT_EQ(E.cwiseAbs().sum(), 1.7);
  const Matrix V = pert.V();
  EXPECT_LE((V.transpose() * V - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LowRank, RoundTrip) {
  CounterRng rng(33);
  for (int t = 0; t < 50; ++t) {
    const LowRankPerturbation pert = random_perturbation(30, 1 + t % 3, t % 2, rng);
    EXPECT_LE((pert.reconstruct() - pert.dense()).cwiseAbs().maxCoeff(), 1e-14);
  }
  EXPECT_EQ(build_low_rank(5, {}).rank(), 0);
}

TEST(LowRank, Errors) {
  EXPECT_THROW(build_low_rank(5, {{0, 1, 1.0}, {1, 2, 1.0}}), std::invalid_argument);
  EXPECT_THROW(build_low_rank(5, {{0, 1, 1.0}, {1, 1, 1.0}}), std::invalid_argument);
  EXPECT_THROW(build_low_rank(5, {{0, 1, 0.0}}), std::invalid_argument);
  EXPECT_THROW(build_low_rank(5, {{0, 5, 1.0}}), std::out_of_range);
  EXPECT_THROW(build_low_rank(5, {{-1, 2, 1.0}}), std::out_of_range);
}

TEST(Secular, VanishesAtPerturbedEigenvalues) {
  const Matrix HS = goe(40, 34);
  const LowRankPerturbation pert = build_low_rank(40, {{3, 17, 0.6}, {5, 5, -0.4}});
  const SpectralData sdS = eigh(HS, true);
  const Vector mu = eigh(Matrix(HS + pert.dense()), false).eigenvalues;
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    const double pole = (sdS.eigenvalues.array() - mu(k)).abs().minCoeff();
    if (pole < 1e-6) continue;
    EXPECT_TRUE(secular_residual_detail(sdS, pert, mu(k)).is_root()) << "k=" << k;
  }
  const SecularResidual far = secular_residual_detail(sdS, pert, 10.0);
  EXPECT_FALSE(far.is_root());
  EXPECT_GT(far.sigma_min, 0.5);
  EXPECT_THROW(secular_residual(sdS, pert, sdS.eigenvalues(3)), std::invalid_argument);
}

TEST(Secular, RankOneToleranceIsNotSelfNormalized) {
  // A 1x1 secular matrix has sigma_min equal to its norm, so the tolerance
  // must be relative to the summands or every mu would count as a root.
  const Matrix HS = goe(42, 11);
  const LowRankPerturbation pert = build_low_rank(42, {{7, 7, 0.8}});
  const SpectralData sdS = eigh(HS, true);
  const Vector mu = eigh(Matrix(HS + pert.dense()), false).eigenvalues;
  int checked = 0;
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    if ((sdS.eigenvalues.array() - mu(k)).abs().minCoeff() < 1e-6) continue;
    EXPECT_TRUE(secular_residual_detail(sdS, pert, mu(k)).is_root()) << "k=" << k;
    const double off = mu(k) + 1e-3 * (sdS.eigenvalues.array() - mu(k)).abs().minCoeff();
    EXPECT_FALSE(secular_residual_detail(sdS, pert, off).is_root()) << "k=" << k;
    ++checked;
  }
  EXPECT_GT(checked, 30);
  EXPECT_THROW(secular_residual(eigh(HS, false), pert, 10.0), std::invalid_argument);
}

TEST(Secular, RootsMatchDenseEigenvaluesOneToOne) {
  CounterRng rng(35);
  for (int t = 0; t < 20; ++t) {
    const long n = 10 + static_cast<long>(rng() % 51);
    const int pairs = static_cast<int>(rng() % 3);
    int singles = static_cast<int>(rng() % static_cast<std::uint64_t>(5 - 2 * pairs));
    if (pairs + singles == 0) singles = 1;
    const LowRankPerturbation pert = random_perturbation(n, pairs, singles, rng);
    ASSERT_LE(pert.rank(), 4);
    const Matrix HS = goe(n, 1000 + t);
    const SpectralData sdS = eigh(HS, true);
    const Vector mu = eigh(Matrix(HS + pert.dense()), false).eigenvalues;
    const std::vector<double> roots = secular_roots(sdS, pert);
    std::vector<double> expected;
    for (Eigen::Index k = 0; k < mu.size(); ++k) {
      if ((sdS.eigenvalues.array() - mu(k)).abs().minCoeff() > 1e-8) expected.push_back(mu(k));
    }
    ASSERT_EQ(roots.size(), expected.size()) << "trial " << t;
    for (std::size_t k = 0; k < roots.size(); ++k) EXPECT_NEAR(roots[k], expected[k], 1e-9) << "trial " << t;
  }
}

TEST(Secular, ScaledPerturbation) {
  const Matrix HS = goe(25, 36);
  const LowRankPerturbation pert = build_low_rank(25, {{0, 9, 1.2}});
  const SpectralData sdS = eigh(HS, true);
  for (double gamma : {0.1, 0.5, 1.0}) {
    const Vector mu = eigh(Matrix(HS + gamma * pert.dense()), false).eigenvalues;
    const std::vector<double> roots = secular_roots(sdS, pert, gamma);
    ASSERT_EQ(roots.size(), static_cast<std::size_t>(mu.size()));
    for (std::size_t k = 0; k < roots.size(); ++k) EXPECT_NEAR(roots[k], mu(static_cast<Eigen::Index>(k)), 1e-9);
  }
}

TEST(NecessityWitness, Examples) {
  Matrix H = Matrix::Zero(3, 3);
  H(0, 1) = H(1, 0) = 4.0;
  auto w = necessity_witness(H);
  ASSERT_TRUE(w);
  EXPECT_EQ(w->bound, 4.0);
  EXPECT_NEAR(largest_eigenvalue(H), 4.0, 1e-14);

  H(0, 0) = -0.5;
  H(1, 1) = 0.3;
  w = necessity_witness(H);
  ASSERT_TRUE(w);
  EXPECT_DOUBLE_EQ(w->bound, 3.9);
  EXPECT_GE(largest_eigenvalue(H), w->bound);

  H(1, 1) = 1.0;  // diagonal too large
  EXPECT_FALSE(necessity_witness(H));
  EXPECT_FALSE(necessity_witness(goe(300, 37)));
}

TEST(NecessityWitness, PlantedEntryForcesLargeEigenvalue) {
  Matrix H = goe(200, 38);
  H(10, 20) = H(20, 10) = 4.0;
  const auto w = necessity_witness(H);
  ASSERT_TRUE(w);
  EXPECT_GE(largest_eigenvalue(H), 3.0);
  EXPECT_GE(largest_eigenvalue(H), w->bound);
}

TEST(TopEigenvalues, AgreesWithFullSpectrum) {
  const Matrix H = goe(80, 39);
  const Vector all = eigh(H, false).eigenvalues;
  const Vector top = top_eigenvalues(H, 3);
  ASSERT_EQ(top.size(), 3);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(top(k), all(77 + k), 1e-12);
}

TEST(Tracking, NoLargeEntriesMeansNoGap) {
  EnsembleSpec spec = EnsembleSpec::goe(100, 40);
  CounterRng rng(40);
  const TrackingTrial t = tracking_trial(spec, 0.05, rng);
  EXPECT_EQ(t.rank_E, 0);
  EXPECT_EQ(t.gap, 0.0);
  EXPECT_TRUE(t.gap_ok);
}

TEST(Tracking, SplitReconstructsWignerScale) {
  EnsembleSpec spec{200, EntryDistribution::pareto_sym(4.5), EntryDistribution::gaussian(2.0), 41, "p45"};
  CounterRng rng(41);
  const CutoffSplitMatrix s = sample_cutoff_split(spec, 0.2, rng);
  EXPECT_LE((s.small - s.small.transpose()).cwiseAbs().maxCoeff(), 0.0);
  const double T = std::pow(200.0, 0.3) / std::sqrt(200.0);
  EXPECT_LE(s.small.cwiseAbs().maxCoeff(), T + 1e-12);
  EXPECT_LE(s.perturbation.dense().cwiseAbs().maxCoeff(), 0.75);
  EXPECT_LE(static_cast<double>(s.perturbation.entries().size()), std::pow(200.0, 1.0));
}

TEST(Tracking, DeterministicAcrossThreadCounts) {
  EnsembleSpec spec{120, EntryDistribution::pareto_sym(4.5), EntryDistribution::gaussian(2.0), 42, "p45"};
  const TrackingSummary a = eigenvalue_tracking(spec, 0.1, 12, 1);
  const TrackingSummary b = eigenvalue_tracking(spec, 0.1, 12, 3);
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t k = 0; k < a.trials.size(); ++k) {
    EXPECT_EQ(a.trials[k].gap, b.trials[k].gap);
    EXPECT_EQ(a.trials[k].rank_E, b.trials[k].rank_E);
  }
  EXPECT_EQ(a.frequency_gap_ok, b.frequency_gap_ok);
}
