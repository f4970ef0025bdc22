#include <cmath>
#include <numbers>

#include <boost/math/special_functions/lambert_w.hpp>
#include <gtest/gtest.h>

#include "rmtedge/ensembles.hpp"
#include "rmtedge/spectra.hpp"
#include "rmtedge/stats.hpp"

using namespace rmtedge;

namespace {

// Moments of a finite law, summed atom by atom in extended precision.
long double discrete_moment(const EntryDistribution& d, int k) {
  const auto& law = std::get<Discrete>(d.law());
  long double acc = 0.0L;
  for (std::size_t i = 0; i < law.atoms.size(); ++i) {
    acc += static_cast<long double>(law.weights[i]) * std::pow(static_cast<long double>(law.atoms[i]), k);
  }
  return acc;
}

double max_abs_atom(const EntryDistribution& d) {
  double m = 0.0;
  for (double a : std::get<Discrete>(d.law()).atoms) m = std::max(m, std::abs(a));
  return m;
}

std::vector<double> draws(const EntryDistribution& d, std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = d.sample(rng);
  return v;
}

std::vector<EntryDistribution> all_kinds() {
  return {EntryDistribution::gaussian(1.0), EntryDistribution::rademacher(),    EntryDistribution::pareto_sym(4.0),
          EntryDistribution::pareto_sym(4.5), EntryDistribution::marginal_log(), four_moment_bounded(0.5, 5.0),
          four_moment_bounded(1.0, 3.0)};
}

}  // namespace

TEST(SampleEntry, RademacherFrequencies) {
  const auto v = draws(EntryDistribution::rademacher(), 100000, 11);
  std::size_t plus = 0;
  for (double x : v) {
    ASSERT_TRUE(x == 1.0 || x == -1.0);
    plus += x > 0;
  }
  const double sigma = std::sqrt(0.25 / 1e5);
  EXPECT_NEAR(plus / 1e5, 0.5, 3 * sigma);
}

TEST(SampleEntry, ParetoFourNeverBelowScale) {
  const auto d = EntryDistribution::pareto_sym(4.0);
  const double s0 = std::sqrt((4.0 - 2.0) / 4.0);
  EXPECT_DOUBLE_EQ(std::get<ParetoSym>(d.law()).scale(), s0);
  for (double x : draws(d, 200000, 5)) ASSERT_GE(std::abs(x), s0);
}

TEST(SampleEntry, GaussianVariance) {
  const auto m = moment_estimates(draws(EntryDistribution::gaussian(1.0), 1000000, 3));
  EXPECT_NEAR(m.variance(), 1.0, 5 * m.central_se[2]);
}

TEST(SampleEntry, DeterministicGivenStream) {
  for (const auto& d : all_kinds()) {
    EXPECT_EQ(draws(d, 1000, 77), draws(d, 1000, 77)) << d.describe();
    EXPECT_NE(draws(d, 1000, 77), draws(d, 1000, 78)) << d.describe();
  }
}

TEST(Standardization, ExactMeanAndVariance) {
  for (const auto& d : all_kinds()) {
    EXPECT_NEAR(d.raw_moment(1), 0.0, 1e-12) << d.describe();
    EXPECT_NEAR(d.raw_moment(2), 1.0, 1e-12) << d.describe();
  }
}

TEST(Standardization, SampledMeanAndVarianceWithinFiveStandardErrors) {
  std::uint64_t seed = 100;
  for (const auto& d : all_kinds()) {
    const auto m = moment_estimates(draws(d, 1000000, ++seed));
    EXPECT_NEAR(m.mean(), 0.0, 5 * m.raw_se[1]) << d.describe();
    EXPECT_NEAR(m.variance(), 1.0, 5 * m.central_se[2]) << d.describe();
  }
}

TEST(MarginalLog, QuantileMatchesLambertW) {
  // 4y + log y = 4 - log u  <=>  4y e^{4y} = 4 e^{4 - log u}.
  for (double u : {1.0, 0.9, 0.5, 1e-3, 1e-9, 1e-15}) {
    const double c = 4.0 - std::log(u);
    const double y = boost::math::lambert_w0(4.0 * std::exp(c)) / 4.0;
    EXPECT_NEAR(MarginalLog::radius_quantile(u), std::exp(y), 1e-12 * std::exp(y)) << "u=" << u;
    EXPECT_NEAR(MarginalLog::radius_tail(MarginalLog::radius_quantile(u)), u, 1e-12 * u);
  }
}

TEST(MarginalLog, UnitVarianceConstant) {
  // E R^2 = e^2 + 2 e^4 E1(2), with E1(2) = 0.04890051070806112.
  const double e = std::numbers::e;
  EXPECT_NEAR(MarginalLog::raw_second_moment(), e * e + 2 * std::pow(e, 4) * 0.04890051070806112, 1e-12);
}

TEST(TailFunctional, ParetoFourIsConstantQuarter) {
  const auto d = EntryDistribution::pareto_sym(4.0);
  for (double s : {1.0, 3.0, 10.0, 1e3, 1e6}) EXPECT_NEAR(d.tail_functional(s), 0.25, 1e-12) << s;
}

TEST(TailFunctional, GaussianTinyAtTwenty) {
  EXPECT_LT(EntryDistribution::gaussian(1.0).tail_functional(20.0), 1e-10);
}

TEST(TailFunctional, MarginalLogDecaysWhileFourthMomentDiverges) {
  const auto d = EntryDistribution::marginal_log();
  double prev = d.tail_functional(10.0);
  for (double s : {1e2, 1e3, 1e4, 1e6, 1e9, 1e12}) {
    const double cur = d.tail_functional(s);
    EXPECT_LT(cur, prev) << s;
    prev = cur;
  }
  EXPECT_LT(d.tail_functional(1e50), 0.005);
  EXPECT_TRUE(std::isinf(d.raw_moment(4)));
  // E[R^4; R <= M] = e^4 (1 - 1/log M + 4 log log M) from integrating the
  // survival function by parts; unbounded in M.
  const double e4 = std::exp(4.0);
  auto truncated = [&](double M) { return e4 * (1.0 - 1.0 / std::log(M) + 4.0 * std::log(std::log(M))); };
  // Check the closed form against the sampled truncated moment.
  const auto v = draws(d, 1000000, 9);
  const double sigma = MarginalLog::scale();
  for (double M : {10.0, 30.0}) {
    std::vector<double> r4(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double r = std::abs(v[i]) * sigma;
      r4[i] = r <= M ? std::pow(r, 4) : 0.0;
    }
    const auto m = moment_estimates(r4);
    EXPECT_NEAR(m.mean(), truncated(M), 5 * m.raw_se[1]) << M;
  }
  EXPECT_GT(truncated(1e100), 2 * truncated(1e4));
}

TEST(TailFunctional, RejectsNonPositiveS) {
  EXPECT_THROW(EntryDistribution::gaussian().tail_functional(0.0), std::invalid_argument);
}

TEST(TailCriterion, Classifier) {
  const std::vector<double> grid{10.0, 1e2, 1e3, 1e4};
  for (const auto& d : {EntryDistribution::gaussian(1.0), EntryDistribution::rademacher(),
                        EntryDistribution::pareto_sym(4.5), EntryDistribution::pareto_sym(6.0),
                        EntryDistribution::marginal_log(), four_moment_bounded(0.5, 5.0)}) {
    double prev = INFINITY;
    for (double s : grid) {
      const double f = d.tail_functional(s);
      EXPECT_TRUE(f < prev || f == 0.0) << d.describe() << " s=" << s;
      prev = f;
    }
    EXPECT_TRUE(satisfies_tail_criterion(d)) << d.describe();
  }
  const auto p4 = EntryDistribution::pareto_sym(4.0);
  for (double s : grid) EXPECT_GE(p4.tail_functional(s), 0.2);
  EXPECT_FALSE(satisfies_tail_criterion(p4));
  EXPECT_FALSE(satisfies_tail_criterion(EntryDistribution::pareto_sym(3.5)));
}

TEST(FourMoment, ZeroThree) {
  const auto d = four_moment_bounded(0.0, 3.0);
  EXPECT_NEAR(discrete_moment(d, 0), 1.0L, 1e-12);
  EXPECT_NEAR(discrete_moment(d, 1), 0.0L, 1e-12);
  EXPECT_NEAR(discrete_moment(d, 2), 1.0L, 1e-12);
  EXPECT_NEAR(discrete_moment(d, 3), 0.0L, 1e-12);
  EXPECT_NEAR(discrete_moment(d, 4), 3.0L, 1e-12);
}

TEST(FourMoment, RademacherAtBoundary) {
  const auto d = four_moment_bounded(0.0, 1.0);
  const auto& law = std::get<Discrete>(d.law());
  ASSERT_EQ(law.atoms.size(), 2u);
  EXPECT_NEAR(law.atoms[0], -1.0, 1e-15);
  EXPECT_NEAR(law.atoms[1], 1.0, 1e-15);
  EXPECT_NEAR(law.weights[0], 0.5, 1e-15);
  EXPECT_NEAR(law.weights[1], 0.5, 1e-15);
}

TEST(FourMoment, OneTenMomentsAndSupport) {
  const auto d = four_moment_bounded(1.0, 10.0);
  EXPECT_NEAR(discrete_moment(d, 1), 0.0L, 1e-12);
  EXPECT_NEAR(discrete_moment(d, 2), 1.0L, 1e-12);
  EXPECT_NEAR(discrete_moment(d, 3), 1.0L, 1e-12);
  EXPECT_NEAR(discrete_moment(d, 4), 10.0L, 1e-12);
  EXPECT_LE(max_abs_atom(d), four_moment_support_constant(1.0) * 10.0);
}

TEST(FourMoment, ExactAcrossBothBranches) {
  for (double A : {-2.0, -1.0, -0.3, 0.0, 0.5, 1.0, 2.5}) {
    for (double extra : {0.0, 0.01, 0.5, 1.0, 1.5, 3.0, 10.0, 100.0}) {
      const double B = A * A + 1.0 + extra;
      const FourMomentLaw f = four_moment_construction(A, B);
      EXPECT_EQ(f.fallback, B < 2 * A * A + 2) << A << " " << B;
      const double scale = std::max(1.0, B);
      EXPECT_NEAR(discrete_moment(f.law, 0), 1.0L, 1e-12);
      EXPECT_NEAR(discrete_moment(f.law, 1), 0.0L, 1e-12 * scale);
      EXPECT_NEAR(discrete_moment(f.law, 2), 1.0L, 1e-12 * scale);
      EXPECT_NEAR(discrete_moment(f.law, 3), A, 1e-12 * scale);
      EXPECT_NEAR(discrete_moment(f.law, 4), B, 1e-12 * scale);
      EXPECT_LE(max_abs_atom(f.law), four_moment_support_constant(A) * B) << A << " " << B;
      for (double w : std::get<Discrete>(f.law.law()).weights) EXPECT_GE(w, 0.0);
    }
  }
}

TEST(FourMoment, TwoPointBoundaryLaw) {
  const auto d = four_moment_bounded(1.0, 2.0);
  EXPECT_EQ(std::get<Discrete>(d.law()).atoms.size(), 2u);
  EXPECT_NEAR(discrete_moment(d, 3), 1.0L, 1e-12);
}

TEST(FourMoment, RejectsInfeasible) {
  EXPECT_THROW(four_moment_bounded(0.0, 0.9), std::invalid_argument);
  EXPECT_THROW(four_moment_bounded(1.0, 1.5), std::invalid_argument);
  EXPECT_THROW(four_moment_bounded(std::nan(""), 3.0), std::invalid_argument);
}

TEST(FourMoment, LiteralSumHasVarianceTwo) {
  // x = X + Y_t with the unscaled t = 4B - 8A^2 - 2: second moment 2, so the
  // literal construction does not standardize. The matcher's scaled form
  // (X + Y_t)/sqrt(2) with t = 4B - 8A^2 - 7 does.
  const double A = 0.5;
  const double B = 5.0;
  const double t = 4 * B - 8 * A * A - 2;
  const double root = std::sqrt(1 + 2 * A * A);
  const double xs[2] = {std::sqrt(2.0) * A - root, std::sqrt(2.0) * A + root};
  const double ps[2] = {(std::sqrt(2.0) * A + root) / (2 * root), (-std::sqrt(2.0) * A + root) / (2 * root)};
  const double p_out = 1.0 / (2 * t * (-1 + t + t * t));
  const double y_in = std::sqrt(t / (1 + t));
  const double ys[4] = {-t, -y_in, y_in, t};
  const double qs[4] = {p_out, 0.5 - p_out, 0.5 - p_out, p_out};
  long double m[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 4; ++k) {
      const long double v = xs[i] + ys[k];
      for (int j = 0; j <= 4; ++j) m[j] += ps[i] * qs[k] * std::pow(v, j);
    }
  }
  EXPECT_NEAR(m[0], 1.0L, 1e-12);
  EXPECT_NEAR(m[1], 0.0L, 1e-12);
  EXPECT_NEAR(m[2], 2.0L, 1e-12);
  EXPECT_GT(std::abs(static_cast<double>(m[4]) - B), 1.0);

  const FourMomentLaw f = four_moment_construction(A, B);
  EXPECT_FALSE(f.fallback);
  EXPECT_DOUBLE_EQ(f.t, 4 * B - 8 * A * A - 7);
}

TEST(Distributions, RejectInvalidParameters) {
  EXPECT_THROW(EntryDistribution::pareto_sym(2.0), std::invalid_argument);
  EXPECT_THROW(EntryDistribution::gaussian(-1.0), std::invalid_argument);
  EXPECT_THROW(EntryDistribution::discrete({1.0}, {0.5}), std::invalid_argument);
  EXPECT_THROW(EntryDistribution::discrete({1.0, 2.0}, {0.5}), std::invalid_argument);
}

TEST(Distributions, DescribeParseRoundTrip) {
  for (const auto& d : all_kinds()) {
    const auto back = parse_distribution(d.describe());
    EXPECT_EQ(back.describe(), d.describe());
  }
  const auto disc = EntryDistribution::discrete({-1.5, 0.25, 3.0}, {0.25, 0.5, 0.25});
  EXPECT_EQ(parse_distribution(disc.describe()).describe(), disc.describe());
  EXPECT_EQ(parse_distribution(" pareto_sym( 4.5 ) ").describe(), "pareto_sym(4.5)");
  EXPECT_THROW(parse_distribution("cauchy"), ConfigError);
  EXPECT_THROW(parse_distribution("pareto_sym(x)"), ConfigError);
  EXPECT_THROW(parse_distribution("pareto_sym(1.5)"), ConfigError);
  EXPECT_THROW(parse_distribution("pareto_sym(4.5"), ConfigError);
  EXPECT_THROW(parse_distribution("bounded_four_moment(0,0.5)"), ConfigError);
}

TEST(SampleWigner, TwoByTwoRademacher) {
  EnsembleSpec spec{2, EntryDistribution::rademacher(), EntryDistribution::gaussian(0.0), 42, "r2"};
  const Matrix H = sample_wigner(spec);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_EQ(H(0, 0), 0.0);
  EXPECT_EQ(H(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(std::abs(H(0, 1)), r);
  const SpectralData sd = eigh(H, false);
  EXPECT_NEAR(sd.eigenvalues(0), -r, 1e-15);
  EXPECT_NEAR(sd.eigenvalues(1), r, 1e-15);
}

TEST(SampleWigner, GoeDiagonalVariance) {
  // Def. of the GOE: E|x_ii|^2 = 2, so E h_ii^2 = 2/N.
  const long N = 10;
  std::vector<double> d2;
  for (std::uint64_t t = 0; t < 10000; ++t) {
    CounterRng rng = trial_stream(5, t);
    const Matrix H = sample_wigner(EnsembleSpec::goe(N), rng);
    for (long i = 0; i < N; ++i) d2.push_back(H(i, i) * H(i, i));
  }
  const auto m = moment_estimates(d2);
  EXPECT_NEAR(m.mean(), 2.0 / N, 5 * m.raw_se[1]);
}

TEST(SampleWigner, SymmetricAndDeterministic) {
  for (const auto& d : all_kinds()) {
    EnsembleSpec spec{40, d, d, 9, "x"};
    const Matrix A = sample_wigner(spec);
    const Matrix B = sample_wigner(spec);
    EXPECT_TRUE((A.array() == B.array()).all()) << d.describe();
    EXPECT_TRUE((A.array() == A.transpose().array()).all()) << d.describe();
    spec.seed = 10;
    EXPECT_FALSE((A.array() == sample_wigner(spec).array()).all());
  }
}

TEST(SampleWigner, EntriesScaledByRootN) {
  EnsembleSpec spec{25, EntryDistribution::rademacher(), EntryDistribution::rademacher(), 1, "r"};
  const Matrix H = sample_wigner(spec);
  EXPECT_TRUE((H.array().abs() == 0.2).all());
}

TEST(BoundedSupport, ZeroAndSpike) {
  const Matrix Z = Matrix::Zero(5, 5);
  EXPECT_TRUE(check_bounded_support(Z, {3.0}).within);
  Matrix S = Matrix::Zero(5, 5);
  S(1, 3) = 2.0 / 3.0;
  const auto c = check_bounded_support(S, {3.0});
  EXPECT_FALSE(c.within);
  EXPECT_DOUBLE_EQ(c.max_abs, 2.0 / 3.0);
  EXPECT_EQ(c.row, 1);
  EXPECT_EQ(c.col, 3);
  EXPECT_THROW(check_bounded_support(Z, {0.0}), std::invalid_argument);
}

TEST(BoundedSupport, GoeAtAdmissibleScale) {
  // q = N^{1/2}/log N, the largest admissible support scale: the bound
  // 1/q ~ 0.30 sits above max|h_ij| ~ 0.25 for a GOE draw at N = 400.
  const long N = 400;
  const double q = std::sqrt(N) / std::log(N);
  int within = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    CounterRng rng = trial_stream(21, t);
    within += check_bounded_support(sample_wigner(EnsembleSpec::goe(N), rng), {q}).within;
  }
  EXPECT_GE(within, 99);
}

TEST(BoundedSupport, GoeAtNToPointFourIsOutside) {
  // With q = N^{0.4} the bound is 1/q ~ 0.09 while the largest of 80000
  // Gaussian entries of size N^{-1/2} is ~0.22, so the check fails in
  // essentially every draw.
  const long N = 400;
  int within = 0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    CounterRng rng = trial_stream(22, t);
    within += check_bounded_support(sample_wigner(EnsembleSpec::goe(N), rng), {std::pow(N, 0.4)}).within;
  }
  EXPECT_EQ(within, 0);
}

TEST(Tridiagonal, MatchesDenseGoeLowMoments) {
  // Same law of lambda_max as the dense GOE: compare means and spreads at N = 100.
  const long N = 100;
  std::vector<double> dense;
  std::vector<double> tri;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    CounterRng a = trial_stream(1, t);
    CounterRng b = trial_stream(2, t);
    dense.push_back(largest_eigenvalue(sample_wigner(EnsembleSpec::goe(N), a)));
    tri.push_back(largest_eigenvalue(sample_goe_tridiagonal(N, b)));
  }
  EXPECT_LT(ks_two_sample(dense, tri), 1.36 * std::sqrt(2.0 / 2000.0) * 1.3);
}
