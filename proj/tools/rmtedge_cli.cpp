// rmtedge: command-line driver for the Monte Carlo experiments.
//
//   rmtedge edge-dist --config edge.ini --threads 8 --out results/edge
//   rmtedge tw-table --out results/tw
//
// Exit codes: 0 success, 1 acceptance threshold violated, 2 configuration
// error, 3 numerical failure.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rmtedge/harness/experiments.hpp"

namespace {

enum Exit { kOk = 0, kThreshold = 1, kConfig = 2, kNumerical = 3 };

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
  bool threads_set = false;
  std::string out;
  bool force = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment configuration file (INI)");
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t& v) { c.seed = v, c.seed_set = true; }, "base seed");
  sub->add_option_function<unsigned>(
      "--threads", [&c](const unsigned& v) { c.threads = v, c.threads_set = true; }, "worker threads (0: all cores)");
  sub->add_option("--out", c.out, "output directory");
  sub->add_flag("--force", c.force, "run even when an ensemble violates the experiment's precondition");
}

rmtedge::harness::ExperimentConfig resolve(const std::string& kind, const Common& c) {
  using namespace rmtedge::harness;
  ExperimentConfig cfg = c.config.empty() ? default_config(kind) : load_config(c.config);
  if (!c.config.empty() && cfg.kind != kind) {
    throw rmtedge::ConfigError("config file is for '" + cfg.kind + "', not '" + kind + "'");
  }
  if (cfg.ensembles.empty() && kind != "tw-table") cfg.ensembles = default_config(kind).ensembles;
  if (c.seed_set) cfg.seed = c.seed;
  if (c.threads_set) cfg.threads = c.threads;
  if (!c.out.empty()) cfg.out = c.out;
  if (c.force) cfg.force = true;
  cfg.validate();
  return cfg;
}

int report(const rmtedge::harness::RunReport& r) {
  for (const auto& line : r.lines) std::cout << line << '\n';
  for (const auto& f : r.files) std::cout << "wrote " << f << '\n';
  std::cout << (r.thresholds_met ? "thresholds met" : "THRESHOLDS NOT MET") << std::endl;
  return r.thresholds_met ? kOk : kThreshold;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rmtedge::harness;
  CLI::App app{"Edge-universality Monte Carlo laboratory for Wigner matrices"};
  app.require_subcommand(1);
  Common common;
  std::string chosen;
  double plant = 0.0;
  for (const auto& kind : experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    add_common(sub, common);
    if (kind == "necessity") sub->add_option("--plant", plant, "overwrite h_12 = h_21 with this value in every draw");
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const ExperimentConfig cfg = resolve(chosen, common);
    if (chosen == "edge-dist") return report(run_edge_experiment(cfg).report);
    if (chosen == "necessity") return report(run_necessity_experiment(cfg, plant).report);
    if (chosen == "rigidity") return report(run_rigidity_experiment(cfg).report);
    if (chosen == "delocalization") return report(run_delocalization_experiment(cfg).report);
    if (chosen == "tracking") return report(run_tracking_experiment(cfg).report);
    if (chosen == "tw-table") return report(run_tw_table(cfg).report);
    if (chosen == "decompose-demo") return report(run_decompose_demo(cfg).report);
    std::cerr << "unknown subcommand\n";
    return kConfig;
  } catch (const rmtedge::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const rmtedge::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
