#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rmtedge/decomposition.hpp"
#include "rmtedge/ensembles.hpp"
#include "rmtedge/errors.hpp"
#include "rmtedge/harness/config.hpp"
#include "rmtedge/harness/csv.hpp"
#include "rmtedge/parallel.hpp"
#include "rmtedge/rng.hpp"
#include "rmtedge/semicircle.hpp"
#include "rmtedge/spectra.hpp"
#include "rmtedge/stats.hpp"
#include "rmtedge/tracywidom.hpp"

namespace rmtedge::harness {

/// What every experiment hands back besides its typed results.
struct RunReport {
  bool thresholds_met = true;
  std::vector<std::string> lines;  // human-readable summary
  std::vector<std::string> files;  // outputs written

  void note(const std::string& s) { lines.push_back(s); }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// Output directory, created on demand; empty means "write nothing".
class Sink {
 public:
  explicit Sink(const std::string& dir) : dir_(dir) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }
  [[nodiscard]] bool active() const noexcept { return !dir_.empty(); }

  void csv(const std::string& name, const CsvTable& t, RunReport& r) const {
    if (!active()) return;
    const auto path = (std::filesystem::path(dir_) / name).string();
    write_csv(path, t);
    r.files.push_back(path);
  }

  void text(const std::string& name, const std::string& body, RunReport& r) const {
    if (!active()) return;
    const auto path = (std::filesystem::path(dir_) / name).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << body;
    if (!out.flush()) throw std::runtime_error("write failed for '" + path + "'");
    r.files.push_back(path);
  }

  void finish(const ExperimentConfig& cfg, RunReport& r) const {
    text("config.ini", serialize(cfg), r);
    std::string body;
    for (const auto& l : r.lines) body += l + "\n";
    body += std::string("thresholds_met = ") + (r.thresholds_met ? "true" : "false") + "\n";
    text("summary.txt", body, r);
  }

 private:
  std::string dir_;
};

}  // namespace detail

/// Seed of the trial streams for one (ensemble, N) cell. Derived from the
/// label rather than the position in the config, so adding an ensemble does
/// not reseed the others.
inline std::uint64_t cell_seed(std::uint64_t base, const std::string& label, long N) {
  return mix64(base ^ mix64(detail::fnv1a(label))) ^ mix64(static_cast<std::uint64_t>(N) + 0x51ed27ULL);
}

inline double rescale_edge(double lambda, long N) {
  return std::pow(static_cast<double>(N), 2.0 / 3.0) * (lambda - 2.0);
}

// ---------------------------------------------------------------- edge ---

struct EdgeTrial {
  bool ok = false;
  double lambda_max = 0.0;
  double rescaled = 0.0;
  std::uint64_t key = 0;
};

struct EdgeSample {
  std::string label;
  long N = 0;
  std::vector<EdgeTrial> trials;
  std::size_t failures = 0;

  [[nodiscard]] std::vector<double> rescaled() const {
    std::vector<double> v;
    for (const auto& t : trials) {
      if (t.ok) v.push_back(t.rescaled);
    }
    return v;
  }
};

struct EdgeResult {
  std::string label;
  long N = 0;
  bool criterion = true;  // tail criterion holds for the off-diagonal law
  double ks_goe = 0.0;
  double p_goe = 1.0;
  double ks_tw = 0.0;
  double p_tw = 1.0;
  std::size_t failures = 0;
  bool pass = true;
};

struct EdgeReport {
  std::vector<EdgeResult> results;
  std::map<long, EdgeSample> reference;  // GOE samples per N
  std::vector<EdgeSample> samples;
  RunReport report;
};

/// M draws of N^{2/3}(lambda_N - 2). Failed eigensolves are counted; more
/// than 0.1% of failures aborts the run.
inline EdgeSample edge_sample(const EnsembleSpec& spec, std::size_t trials, unsigned threads) {
  EdgeSample s;
  s.label = spec.label;
  s.N = spec.N;
  s.trials = run_trials(trials, threads, [&](std::size_t t) {
    CounterRng rng = trial_stream(spec.seed, t);
    EdgeTrial r;
    r.key = rng.key();
    try {
      const Matrix H = sample_wigner(spec, rng);
      r.lambda_max = largest_eigenvalue(H);
      r.rescaled = rescale_edge(r.lambda_max, spec.N);
      r.ok = true;
    } catch (const NumericalError&) {
      r.ok = false;
    }
    return r;
  });
  for (const auto& t : s.trials) s.failures += !t.ok;
  if (static_cast<double>(s.failures) > 1e-3 * static_cast<double>(trials)) {
    throw NumericalError("edge experiment '" + spec.label + "' N=" + std::to_string(spec.N) + ": " +
                         std::to_string(s.failures) + " of " + std::to_string(trials) + " eigensolves failed");
  }
  return s;
}

inline CsvTable edge_csv(const EdgeSample& s) {
  CsvTable t{schema::edge, {}};
  for (std::size_t i = 0; i < s.trials.size(); ++i) {
    const auto& r = s.trials[i];
    if (!r.ok) continue;
    t.rows.push_back({static_cast<double>(i), static_cast<double>(s.N), r.lambda_max, r.rescaled,
                      static_cast<double>(r.key & 0xffffffffULL), static_cast<double>(r.key >> 32)});
  }
  return t;
}

inline EdgeReport run_edge_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.ensembles.empty()) throw ConfigError("edge-dist needs at least one ensemble");
  for (const auto& e : cfg.ensembles) {
    if (!satisfies_tail_criterion(e.offdiag) && !cfg.force) {
      throw ConfigError("ensemble '" + e.label + "' (" + e.offdiag.describe() +
                        ") violates the tail criterion; pass --force to include it in the sufficiency run");
    }
  }
  const detail::Sink sink(cfg.out);
  EdgeReport rep;
  for (long N : cfg.sizes) {
    const EnsembleSpec goe{N, EntryDistribution::gaussian(1.0), EntryDistribution::gaussian(2.0),
                           cell_seed(cfg.seed, "goe-reference", N), "goe-reference"};
    rep.reference[N] = edge_sample(goe, cfg.trials, cfg.threads);
    sink.csv("edge_goe-reference_N" + std::to_string(N) + ".csv", edge_csv(rep.reference[N]), rep.report);
    const auto ref = rep.reference[N].rescaled();
    for (const auto& e : cfg.ensembles) {
      EnsembleSpec spec = cfg.spec(e, N);
      spec.seed = cell_seed(cfg.seed, e.label, N);
      EdgeSample s = edge_sample(spec, cfg.trials, cfg.threads);
      sink.csv("edge_" + e.label + "_N" + std::to_string(N) + ".csv", edge_csv(s), rep.report);
      const auto x = s.rescaled();
      EdgeResult r;
      r.label = e.label;
      r.N = N;
      r.criterion = satisfies_tail_criterion(e.offdiag);
      r.failures = s.failures;
      r.ks_goe = ks_two_sample(x, ref);
      const double n_eff = static_cast<double>(x.size()) * ref.size() / static_cast<double>(x.size() + ref.size());
      r.p_goe = ks_pvalue(r.ks_goe, n_eff);
      if (cfg.reference_tw) {
        r.ks_tw = ks_one_sample(x, [](double v) { return tw_cdf(1, v); });
        r.p_tw = ks_pvalue(r.ks_tw, static_cast<double>(x.size()));
      }
      r.pass = r.ks_goe <= cfg.ks_tolerance;
      rep.report.thresholds_met = rep.report.thresholds_met && r.pass;
      rep.report.note("edge " + e.label + " N=" + std::to_string(N) + ": KS vs GOE = " + detail::fmt(r.ks_goe) +
                      " (p = " + detail::fmt(r.p_goe, 3) + ", tolerance " + detail::fmt(cfg.ks_tolerance) + ")" +
                      (cfg.reference_tw ? ", KS vs F1 = " + detail::fmt(r.ks_tw) : std::string()) +
                      (r.criterion ? "" : " [criterion violated, forced]") +
                      (r.failures ? ", failed trials " + std::to_string(r.failures) : std::string()));
      rep.results.push_back(r);
      rep.samples.push_back(std::move(s));
    }
  }
  sink.finish(cfg, rep.report);
  return rep;
}

// ----------------------------------------------------------- necessity ---

struct NecessityTrial {
  double lambda_max = 0.0;
  bool exceeds3 = false;
  bool witness = false;
};

struct NecessityResult {
  std::string label;
  long N = 0;
  bool criterion = true;
  std::size_t exceed_count = 0;
  std::size_t witness_count = 0;
  std::size_t trials = 0;
  double estimate = 0.0;
  Interval ci;
};

struct NecessityReport {
  std::vector<NecessityResult> results;
  RunReport report;
};

/// One necessity trial; `plant` > 0 overwrites h_12 = h_21 with that value.
inline NecessityTrial necessity_trial(const EnsembleSpec& spec, CounterRng& rng, double plant = 0.0) {
  Matrix H = sample_wigner(spec, rng);
  if (plant != 0.0 && spec.N >= 2) {
    H(0, 1) = plant;
    H(1, 0) = plant;
  }
  NecessityTrial t;
  t.lambda_max = largest_eigenvalue(H);
  t.exceeds3 = t.lambda_max >= 3.0;
  t.witness = necessity_witness(H).has_value();
  return t;
}

inline NecessityReport run_necessity_experiment(const ExperimentConfig& cfg, double plant = 0.0) {
  cfg.validate();
  if (cfg.ensembles.empty()) throw ConfigError("necessity needs at least one ensemble");
  const detail::Sink sink(cfg.out);
  NecessityReport rep;
  for (const auto& e : cfg.ensembles) {
    const bool criterion = satisfies_tail_criterion(e.offdiag);
    if (criterion && plant == 0.0) {
      std::clog << "necessity: ensemble '" << e.label << "' satisfies the tail criterion; treated as a control\n";
    }
    std::vector<NecessityResult> per_size;
    for (long N : cfg.sizes) {
      EnsembleSpec spec = cfg.spec(e, N);
      spec.seed = cell_seed(cfg.seed, e.label, N);
      const auto trials = run_trials(cfg.trials, cfg.threads, [&](std::size_t t) {
        CounterRng rng = trial_stream(spec.seed, t);
        return necessity_trial(spec, rng, plant);
      });
      CsvTable csv{schema::necessity, {}};
      NecessityResult r;
      r.label = e.label;
      r.N = N;
      r.criterion = criterion;
      r.trials = trials.size();
      for (std::size_t i = 0; i < trials.size(); ++i) {
        r.exceed_count += trials[i].exceeds3;
        r.witness_count += trials[i].witness;
        csv.rows.push_back({static_cast<double>(i), static_cast<double>(N), trials[i].lambda_max,
                            trials[i].exceeds3 ? 1.0 : 0.0, trials[i].witness ? 1.0 : 0.0});
      }
      r.estimate = static_cast<double>(r.exceed_count) / static_cast<double>(r.trials);
      r.ci = binomial_ci(r.exceed_count, r.trials, 0.95);
      sink.csv("necessity_" + e.label + "_N" + std::to_string(N) + ".csv", csv, rep.report);
      rep.report.note("necessity " + e.label + " N=" + std::to_string(N) + ": P(lambda_N >= 3) = " +
                      detail::fmt(r.estimate) + " [" + detail::fmt(r.ci.lower) + ", " + detail::fmt(r.ci.upper) +
                      "], witnesses " + std::to_string(r.witness_count) + "/" + std::to_string(r.trials));
      per_size.push_back(r);
    }
    bool pass = true;
    if (plant != 0.0) {
      for (const auto& r : per_size) pass = pass && r.exceed_count == r.trials;
    } else if (!criterion) {
      for (const auto& r : per_size) pass = pass && r.ci.lower > cfg.necessity_lower;
      // The estimate may not fall by more than a factor 2 from the smallest
      // to the largest size.
      pass = pass && per_size.back().estimate >= 0.5 * per_size.front().estimate;
    } else {
      for (const auto& r : per_size) pass = pass && r.ci.upper < cfg.control_upper;
    }
    rep.report.note("necessity " + e.label + ": " + (pass ? "thresholds met" : "thresholds NOT met"));
    rep.report.thresholds_met = rep.report.thresholds_met && pass;
    rep.results.insert(rep.results.end(), per_size.begin(), per_size.end());
  }
  sink.finish(cfg, rep.report);
  return rep;
}

// ------------------------------------------------------------ rigidity ---

struct RigidityStats {
  double rig_max = 0.0;    // max_j N^{2/3} min(j, N-j+1)^{1/3} |lambda_j - gamma_j|
  double count_sup = 0.0;  // N sup_E |n_N(E) - n_sc(E)|
};

inline std::vector<double> classical_locations(long N) {
  std::vector<double> g(static_cast<std::size_t>(N));
  for (long j = 1; j <= N; ++j) g[static_cast<std::size_t>(j - 1)] = classical_location(j, N);
  return g;
}

/// Both rigidity statistics for an ascending spectrum. The counting sup is
/// exact: it is attained at an eigenvalue, from the left or the right.
inline RigidityStats rigidity_stats(const Vector& eigenvalues, const std::vector<double>& gammas) {
  const auto N = eigenvalues.size();
  if (static_cast<std::size_t>(N) != gammas.size()) throw std::invalid_argument("rigidity_stats: size mismatch");
  RigidityStats s;
  const double n = static_cast<double>(N);
  const double n23 = std::pow(n, 2.0 / 3.0);
  for (Eigen::Index k = 0; k < N; ++k) {
    const double j = static_cast<double>(k + 1);
    const double weight = n23 * std::cbrt(std::min(j, n - j + 1.0));
    s.rig_max = std::max(s.rig_max, weight * std::abs(eigenvalues(k) - gammas[static_cast<std::size_t>(k)]));
    const double F = n_sc(eigenvalues(k));
    // Count just below and at lambda_k, with ties stepped over together.
    Eigen::Index hi = k;
    while (hi + 1 < N && eigenvalues(hi + 1) == eigenvalues(k)) ++hi;
    Eigen::Index lo = k;
    while (lo > 0 && eigenvalues(lo - 1) == eigenvalues(k)) --lo;
    s.count_sup = std::max({s.count_sup, std::abs(static_cast<double>(hi + 1) - n * F), std::abs(static_cast<double>(lo) - n * F)});
  }
  return s;
}

struct RigidityResult {
  long N = 0;
  std::vector<RigidityStats> trials;
  double rig_q99 = 0.0;
  double envelope = 0.0;       // phi(N)^C
  double counting_bound = 0.0;  // K (log N)^2
  double counting_fraction = 0.0;
  bool pass = true;
};

struct RigidityReport {
  std::vector<RigidityResult> results;
  RunReport report;
};

inline RigidityReport run_rigidity_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.ensembles.empty()) throw ConfigError("rigidity needs an ensemble");
  const detail::Sink sink(cfg.out);
  RigidityReport rep;
  for (const auto& e : cfg.ensembles) {
    // The rigidity theorem asks for a finite fourth moment of the entries.
    {
      CounterRng rng(cell_seed(cfg.seed, e.label + "-moments", 0));
      std::vector<double> draws(1 << 16);
      for (auto& x : draws) x = e.offdiag.sample(rng);
      if (fourth_moment_divergence(draws).flagged) {
        std::clog << "rigidity: ensemble '" << e.label << "' looks like it has no finite fourth moment\n";
      }
    }
    for (long N : cfg.sizes) {
      EnsembleSpec spec = cfg.spec(e, N);
      spec.seed = cell_seed(cfg.seed, e.label, N);
      const auto gammas = classical_locations(N);
      RigidityResult r;
      r.N = N;
      r.trials = run_trials(cfg.trials, cfg.threads, [&](std::size_t t) {
        CounterRng rng = trial_stream(spec.seed, t);
        return rigidity_stats(eigh(sample_wigner(spec, rng), false).eigenvalues, gammas);
      });
      std::vector<double> rig;
      std::size_t within = 0;
      r.envelope = PolylogScale{static_cast<double>(N), cfg.envelope_C}.envelope();
      r.counting_bound = cfg.counting_constant * std::pow(std::log(static_cast<double>(N)), 2);
      CsvTable csv{schema::rigidity, {}};
      for (std::size_t i = 0; i < r.trials.size(); ++i) {
        rig.push_back(r.trials[i].rig_max);
        within += r.trials[i].count_sup <= r.counting_bound;
        csv.rows.push_back({static_cast<double>(i), static_cast<double>(N), r.trials[i].rig_max, r.trials[i].count_sup});
      }
      r.rig_q99 = empirical_quantile(rig, 0.99);
      r.counting_fraction = static_cast<double>(within) / static_cast<double>(r.trials.size());
      r.pass = r.rig_q99 <= r.envelope && r.counting_fraction >= cfg.required_fraction;
      rep.report.thresholds_met = rep.report.thresholds_met && r.pass;
      sink.csv("rigidity_" + e.label + "_N" + std::to_string(N) + ".csv", csv, rep.report);
      rep.report.note("rigidity " + e.label + " N=" + std::to_string(N) + ": q99(rig_max) = " + detail::fmt(r.rig_q99) +
                      " vs phi^" + detail::fmt(cfg.envelope_C) + " = " + detail::fmt(r.envelope) +
                      "; counting within " + detail::fmt(r.counting_bound) + " in " + detail::fmt(r.counting_fraction) +
                      " of trials");
      rep.results.push_back(std::move(r));
    }
  }
  sink.finish(cfg, rep.report);
  return rep;
}

// ------------------------------------------------------ delocalization ---

struct DelocalizationTrial {
  double deloc = 0.0;
  double norm = 0.0;
};

struct DelocalizationResult {
  long N = 0;
  std::vector<DelocalizationTrial> trials;
  double deloc_bound = 0.0;  // (log N)^3
  double deloc_fraction = 0.0;
  double norm_fraction = 0.0;  // fraction with ||H|| in [1.9, 2.2]
  bool pass = true;
};

struct DelocalizationReport {
  std::vector<DelocalizationResult> results;
  RunReport report;
};

inline DelocalizationReport run_delocalization_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.ensembles.empty()) throw ConfigError("delocalization needs an ensemble");
  const detail::Sink sink(cfg.out);
  DelocalizationReport rep;
  for (const auto& e : cfg.ensembles) {
    for (long N : cfg.sizes) {
      EnsembleSpec spec = cfg.spec(e, N);
      spec.seed = cell_seed(cfg.seed, e.label, N);
      DelocalizationResult r;
      r.N = N;
      r.deloc_bound = std::pow(std::log(static_cast<double>(N)), 3);
      r.trials = run_trials(cfg.trials, cfg.threads, [&](std::size_t t) {
        CounterRng rng = trial_stream(spec.seed, t);
        const SpectralData sd = eigh(sample_wigner(spec, rng), true);
        return DelocalizationTrial{delocalization_stat(sd), operator_norm(sd)};
      });
      CsvTable csv{schema::delocalization, {}};
      std::size_t d_ok = 0;
      std::size_t n_ok = 0;
      for (std::size_t i = 0; i < r.trials.size(); ++i) {
        d_ok += r.trials[i].deloc <= r.deloc_bound;
        n_ok += r.trials[i].norm >= 1.9 && r.trials[i].norm <= 2.2;
        csv.rows.push_back({static_cast<double>(i), static_cast<double>(N), r.trials[i].deloc, r.trials[i].norm});
      }
      const double m = static_cast<double>(r.trials.size());
      r.deloc_fraction = static_cast<double>(d_ok) / m;
      r.norm_fraction = static_cast<double>(n_ok) / m;
      r.pass = r.deloc_fraction >= cfg.required_fraction && r.norm_fraction >= cfg.required_fraction;
      rep.report.thresholds_met = rep.report.thresholds_met && r.pass;
      sink.csv("delocalization_" + e.label + "_N" + std::to_string(N) + ".csv", csv, rep.report);
      rep.report.note("delocalization " + e.label + " N=" + std::to_string(N) + ": N max|u|^2 <= " +
                      detail::fmt(r.deloc_bound) + " in " + detail::fmt(r.deloc_fraction) +
                      " of trials; ||H|| in [1.9, 2.2] in " + detail::fmt(r.norm_fraction));
      rep.results.push_back(std::move(r));
    }
  }
  sink.finish(cfg, rep.report);
  return rep;
}

// ------------------------------------------------------------ tracking ---

struct TrackingResult {
  std::string label;
  long N = 0;
  TrackingSummary summary;
  Interval ci;
  bool pass = true;
};

struct TrackingReport {
  std::vector<TrackingResult> results;
  RunReport report;
};

inline CsvTable tracking_csv(const TrackingSummary& s) {
  CsvTable t{schema::tracking, {}};
  for (std::size_t i = 0; i < s.trials.size(); ++i) {
    const auto& r = s.trials[i];
    t.rows.push_back({static_cast<double>(i), static_cast<double>(r.N), r.gap, r.gap_ok ? 1.0 : 0.0,
                      static_cast<double>(r.rank_E)});
  }
  return t;
}

inline TrackingReport run_tracking_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.ensembles.empty()) throw ConfigError("tracking needs an ensemble");
  const detail::Sink sink(cfg.out);
  TrackingReport rep;
  for (const auto& e : cfg.ensembles) {
    for (long N : cfg.sizes) {
      EnsembleSpec spec = cfg.spec(e, N);
      spec.seed = cell_seed(cfg.seed, e.label, N);
      TrackingResult r;
      r.label = e.label;
      r.N = N;
      r.summary = eigenvalue_tracking(spec, cfg.epsilon, cfg.trials, cfg.threads);
      std::size_t ok = 0;
      for (const auto& t : r.summary.trials) ok += t.gap_ok;
      r.ci = binomial_ci(ok, r.summary.trials.size(), 0.95);
      r.pass = r.summary.frequency_gap_ok >= cfg.tracking_frequency;
      rep.report.thresholds_met = rep.report.thresholds_met && r.pass;
      sink.csv("tracking_" + e.label + "_N" + std::to_string(N) + ".csv", tracking_csv(r.summary), rep.report);
      rep.report.note("tracking " + e.label + " N=" + std::to_string(N) + " eps=" + detail::fmt(cfg.epsilon) +
                      ": P(gap <= N^-3/4) = " + detail::fmt(r.summary.frequency_gap_ok) + " [" +
                      detail::fmt(r.ci.lower) + ", " + detail::fmt(r.ci.upper) + "]; among " +
                      std::to_string(r.summary.trials.size() - r.summary.spacing_violations) +
                      " trials with spacing >= 2N^-3/4: " + detail::fmt(r.summary.frequency_gap_ok_spaced) +
                      "; collisions re-drawn " + std::to_string(r.summary.collisions));
      rep.results.push_back(std::move(r));
    }
  }
  sink.finish(cfg, rep.report);
  return rep;
}

// ------------------------------------------------------------ tw-table ---

struct TWTableReport {
  CsvTable table;
  double route_gap = 0.0;
  double mean1 = 0.0;
  double mean2 = 0.0;
  RunReport report;
};

inline TWTableReport run_tw_table(const ExperimentConfig& cfg) {
  cfg.validate();
  const detail::Sink sink(cfg.out);
  TWTable::Options opt;
  opt.s_min = cfg.s_min;
  opt.s_max = cfg.s_max;
  opt.step = cfg.step;
  const TWTable tw(opt);
  TWTableReport rep;
  rep.table.columns = schema::tw_table;
  for (std::size_t i = 0; i < tw.s().size(); ++i) rep.table.rows.push_back({tw.s()[i], tw.F1()[i], tw.F2()[i]});
  rep.route_gap = tw.route_gap();
  rep.mean1 = tw.mean(1);
  rep.mean2 = tw.mean(2);
  rep.report.thresholds_met = rep.route_gap <= 1e-6;
  rep.report.note("tw-table: " + std::to_string(tw.s().size()) + " grid points on [" + detail::fmt(cfg.s_min) + ", " +
                  detail::fmt(cfg.s_max) + "], route gap " + detail::fmt(rep.route_gap, 3) + ", mean F1 " +
                  detail::fmt(rep.mean1) + ", mean F2 " + detail::fmt(rep.mean2) + ", q(0) " +
                  detail::fmt(tw.q_at_zero(), 10));
  sink.csv("tw_table.csv", rep.table, rep.report);
  sink.finish(cfg, rep.report);
  return rep;
}

// ------------------------------------------------------ decompose-demo ---

struct DecomposeDemoReport {
  CutoffParams params;
  std::size_t large_entries = 0;
  long rank_E = 0;
  double reconstruction_error = 0.0;  // ||V D V^T - E||_max
  double lambda_max = 0.0;
  double mu_max = 0.0;
  double secular_at_mu = 0.0;  // relative smallest singular value at mu_N
  RunReport report;
};

/// One cutoff split of one draw: parameters, the low-rank factor and the
/// secular identity at the top eigenvalue of H^S + E.
inline DecomposeDemoReport run_decompose_demo(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.ensembles.empty()) throw ConfigError("decompose-demo needs an ensemble");
  const detail::Sink sink(cfg.out);
  const auto& e = cfg.ensembles.front();
  const long N = cfg.sizes.front();
  EnsembleSpec spec = cfg.spec(e, N);
  spec.seed = cell_seed(cfg.seed, e.label, N);
  CounterRng rng = trial_stream(spec.seed, 0);
  const CutoffSplitMatrix split = sample_cutoff_split(spec, cfg.epsilon, rng);

  DecomposeDemoReport rep;
  rep.params = cutoff_params(e.offdiag, e.diag, N, cfg.epsilon);
  rep.large_entries = split.large_entries;
  rep.rank_E = static_cast<long>(split.perturbation.rank());
  const Matrix E = split.perturbation.dense();
  rep.reconstruction_error = rep.rank_E ? (split.perturbation.reconstruct() - E).cwiseAbs().maxCoeff() : 0.0;
  const SpectralData sdS = eigh(split.small, true);
  rep.lambda_max = sdS.largest();
  rep.mu_max = largest_eigenvalue(Matrix(split.small + E));
  if (rep.rank_E > 0 && std::abs(rep.mu_max - rep.lambda_max) > 1e-12) {
    const auto res = secular_residual_detail(sdS, split.perturbation, rep.mu_max);
    rep.secular_at_mu = res.sigma_min / res.scale;
  }
  rep.report.note("decompose-demo " + e.label + " N=" + std::to_string(N) + " eps=" + detail::fmt(cfg.epsilon) +
                  ": T = " + detail::fmt(rep.params.threshold) + ", alpha = " + detail::fmt(rep.params.alpha, 4) +
                  ", beta = " + detail::fmt(rep.params.beta, 4));
  rep.report.note("large entries " + std::to_string(rep.large_entries) + ", rank E " + std::to_string(rep.rank_E) +
                  ", |VDV^T - E|_max = " + detail::fmt(rep.reconstruction_error, 3));
  rep.report.note("lambda_N(H^S) = " + detail::fmt(rep.lambda_max, 12) + ", lambda_N(H^S + E) = " +
                  detail::fmt(rep.mu_max, 12) + ", relative secular residual at mu_N = " +
                  detail::fmt(rep.secular_at_mu, 3));
  CsvTable entries{{"row", "col", "value"}, {}};
  for (const auto& x : split.perturbation.entries()) {
    entries.rows.push_back({static_cast<double>(x.row), static_cast<double>(x.col), x.value});
  }
  sink.csv("decompose_E_entries.csv", entries, rep.report);
  sink.finish(cfg, rep.report);
  return rep;
}

}  // namespace rmtedge::harness
