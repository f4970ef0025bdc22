#pragma once

// Experiment configuration: a flat INI file.
//
//   [experiment]
//   kind = edge-dist
//   trials = 2000
//   sizes = 500
//   seed = 1
//
//   [ensemble:rademacher]
//   offdiag = rademacher
//   diag = gaussian(2)
//
// Keys that only matter for one experiment live in a section named after
// it, e.g. [edge-dist] ks_tolerance = 0.06.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rmtedge/ensembles.hpp"
#include "rmtedge/errors.hpp"

namespace rmtedge::harness {

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"edge-dist", "necessity",   "rigidity",      "delocalization",
                                              "tracking",  "tw-table",    "decompose-demo"};
  return kinds;
}

struct EnsembleEntry {
  std::string label;
  EntryDistribution offdiag;
  EntryDistribution diag;
};

struct ExperimentConfig {
  std::string kind = "edge-dist";
  std::vector<EnsembleEntry> ensembles;
  std::size_t trials = 2000;
  std::vector<long> sizes{100, 200, 400, 500, 1000};
  double epsilon = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: all hardware threads
  std::string out = "results";
  double envelope_C = 2.0;
  bool force = false;

  // edge-dist
  double ks_tolerance = 0.06;
  bool reference_tw = true;  // also report one-sample KS against F_1
  // necessity
  double necessity_lower = 0.005;
  double control_upper = 0.01;
  // rigidity
  double counting_constant = 50.0;
  double required_fraction = 0.99;
  // tracking
  double tracking_frequency = 0.9;
  // tw-table
  double s_min = -10.0;
  double s_max = 6.0;
  double step = 0.02;

  [[nodiscard]] EnsembleSpec spec(const EnsembleEntry& e, long N) const {
    return {N, e.offdiag, e.diag, seed, e.label};
  }

  void validate() const {
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw ConfigError("unknown experiment kind: " + kind);
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (sizes.empty()) throw ConfigError("sizes must be nonempty");
    for (long n : sizes) {
      if (n < 2) throw ConfigError("every size must be >= 2");
    }
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("epsilon must lie in (0, 1/2)");
    if (!(step > 0.0) || !(s_min < s_max)) throw ConfigError("bad tw-table grid");
    std::vector<std::string> labels;
    for (const auto& e : ensembles) {
      if (e.label.empty() || e.label.find_first_of(" /\\.:") != std::string::npos) {
        throw ConfigError("ensemble labels must be nonempty and free of spaces, '.', ':' and slashes: '" + e.label + "'");
      }
      if (std::find(labels.begin(), labels.end(), e.label) != labels.end()) {
        throw ConfigError("duplicate ensemble label: " + e.label);
      }
      labels.push_back(e.label);
    }
  }
};

namespace detail {

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    std::string s;
    is >> s;
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + text + "'");
  } else {
    if constexpr (std::is_unsigned_v<T>) {
      if (text.find('-') != std::string::npos) throw ConfigError("key '" + key + "' must be nonnegative");
    }
    is >> v;
    std::string rest;
    if (is.fail() || (is >> rest)) throw ConfigError("key '" + key + "': cannot parse '" + text + "'");
    return v;
  }
}

inline std::vector<long> parse_sizes(const std::string& text) {
  std::vector<long> out;
  std::string tok;
  std::istringstream is(text);
  while (std::getline(is, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
    if (tok.empty()) continue;
    out.push_back(parse_value<long>("sizes", tok));
  }
  return out;
}

}  // namespace detail

inline boost::property_tree::ptree to_ptree(const ExperimentConfig& c) {
  using detail::format_double;
  boost::property_tree::ptree pt;
  std::string sizes;
  for (std::size_t i = 0; i < c.sizes.size(); ++i) sizes += (i ? "," : "") + std::to_string(c.sizes[i]);
  pt.put("experiment.kind", c.kind);
  pt.put("experiment.trials", std::to_string(c.trials));
  pt.put("experiment.sizes", sizes);
  pt.put("experiment.epsilon", format_double(c.epsilon));
  pt.put("experiment.seed", std::to_string(c.seed));
  pt.put("experiment.threads", std::to_string(c.threads));
  pt.put("experiment.out", c.out);
  pt.put("experiment.envelope_C", format_double(c.envelope_C));
  pt.put("experiment.force", c.force ? "true" : "false");
  pt.put("edge-dist.ks_tolerance", format_double(c.ks_tolerance));
  pt.put("edge-dist.reference_tw", c.reference_tw ? "true" : "false");
  pt.put("necessity.lower", format_double(c.necessity_lower));
  pt.put("necessity.control_upper", format_double(c.control_upper));
  pt.put("rigidity.counting_constant", format_double(c.counting_constant));
  pt.put("rigidity.required_fraction", format_double(c.required_fraction));
  pt.put("tracking.frequency", format_double(c.tracking_frequency));
  pt.put("tw-table.s_min", format_double(c.s_min));
  pt.put("tw-table.s_max", format_double(c.s_max));
  pt.put("tw-table.step", format_double(c.step));
  for (const auto& e : c.ensembles) {
    boost::property_tree::ptree section;
    section.put("offdiag", e.offdiag.describe());
    section.put("diag", e.diag.describe());
    pt.add_child(boost::property_tree::ptree::path_type("ensemble:" + e.label, '\0'), section);
  }
  return pt;
}

inline ExperimentConfig from_ptree(const boost::property_tree::ptree& pt) {
  using detail::parse_value;
  ExperimentConfig c;
  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    const auto s = pt.get_child_optional(boost::property_tree::ptree::path_type(section, '\0'));
    if (!s) return std::nullopt;
    const auto v = s->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  };
  auto read = [&](const std::string& section, const std::string& key, auto& field) {
    if (const auto v = get(section, key)) {
      field = parse_value<std::decay_t<decltype(field)>>(section + "." + key, *v);
    }
  };

  for (const auto& [name, section] : pt) {
    const bool known = name == "experiment" || name.rfind("ensemble:", 0) == 0 ||
                       std::find(experiment_kinds().begin(), experiment_kinds().end(), name) != experiment_kinds().end();
    if (section.empty() && !section.data().empty()) throw ConfigError("key outside any section: " + name);
    if (!known) throw ConfigError("unknown config section: [" + name + "]");
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"experiment", {"kind", "trials", "sizes", "epsilon", "seed", "threads", "out", "envelope_C", "force"}},
        {"edge-dist", {"ks_tolerance", "reference_tw"}},
        {"necessity", {"lower", "control_upper"}},
        {"rigidity", {"counting_constant", "required_fraction"}},
        {"tracking", {"frequency"}},
        {"tw-table", {"s_min", "s_max", "step"}},
        {"ensemble", {"offdiag", "diag"}},
        {"delocalization", {}},
        {"decompose-demo", {}},
    };
    const auto& allowed = keys.at(name.rfind("ensemble:", 0) == 0 ? std::string("ensemble") : name);
    for (const auto& kv : section) {
      if (std::find(allowed.begin(), allowed.end(), kv.first) == allowed.end()) {
        throw ConfigError("unknown key '" + kv.first + "' in section [" + name + "]");
      }
    }
  }

  if (const auto v = get("experiment", "kind")) c.kind = *v;
  read("experiment", "trials", c.trials);
  if (const auto v = get("experiment", "sizes")) c.sizes = detail::parse_sizes(*v);
  read("experiment", "epsilon", c.epsilon);
  read("experiment", "seed", c.seed);
  read("experiment", "threads", c.threads);
  if (const auto v = get("experiment", "out")) c.out = *v;
  read("experiment", "envelope_C", c.envelope_C);
  read("experiment", "force", c.force);
  read("edge-dist", "ks_tolerance", c.ks_tolerance);
  read("edge-dist", "reference_tw", c.reference_tw);
  read("necessity", "lower", c.necessity_lower);
  read("necessity", "control_upper", c.control_upper);
  read("rigidity", "counting_constant", c.counting_constant);
  read("rigidity", "required_fraction", c.required_fraction);
  read("tracking", "frequency", c.tracking_frequency);
  read("tw-table", "s_min", c.s_min);
  read("tw-table", "s_max", c.s_max);
  read("tw-table", "step", c.step);

  for (const auto& [name, section] : pt) {
    if (name.rfind("ensemble:", 0) != 0) continue;
    EnsembleEntry e{name.substr(9), EntryDistribution::gaussian(1.0), EntryDistribution::gaussian(2.0)};
    try {
      if (const auto v = section.get_optional<std::string>("offdiag")) e.offdiag = parse_distribution(*v);
      if (const auto v = section.get_optional<std::string>("diag")) e.diag = parse_distribution(*v);
    } catch (const std::invalid_argument& err) {
      throw ConfigError("ensemble '" + e.label + "': " + err.what());
    }
    c.ensembles.push_back(std::move(e));
  }
  c.validate();
  return c;
}

inline std::string serialize(const ExperimentConfig& c) {
  std::ostringstream os;
  boost::property_tree::write_ini(os, to_ptree(c));
  return os.str();
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  return from_ptree(pt);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

/// Default configuration for an experiment kind, with the ensembles the
/// corresponding acceptance check uses.
inline ExperimentConfig default_config(const std::string& kind) {
  ExperimentConfig c;
  c.kind = kind;
  const auto goe = EnsembleEntry{"goe", EntryDistribution::gaussian(1.0), EntryDistribution::gaussian(2.0)};
  const auto gdiag = EntryDistribution::gaussian(2.0);
  if (kind == "edge-dist") {
    c.sizes = {500};
    c.ensembles = {{"rademacher", EntryDistribution::rademacher(), gdiag},
                   {"pareto45", EntryDistribution::pareto_sym(4.5), gdiag},
                   {"fourmoment", four_moment_bounded(0.5, 5.0), gdiag},
                   {"marginallog", EntryDistribution::marginal_log(), gdiag}};
  } else if (kind == "necessity") {
    c.sizes = {100, 200, 400};
    c.ensembles = {{"pareto4", EntryDistribution::pareto_sym(4.0), gdiag}, goe};
  } else if (kind == "rigidity") {
    c.sizes = {1000};
    c.trials = 100;
    c.ensembles = {goe};
  } else if (kind == "delocalization") {
    c.sizes = {500};
    c.trials = 100;
    c.ensembles = {goe};
  } else if (kind == "tracking") {
    c.sizes = {400};
    c.trials = 200;
    c.ensembles = {{"pareto45", EntryDistribution::pareto_sym(4.5), gdiag}};
  } else if (kind == "decompose-demo") {
    c.sizes = {400};
    c.trials = 1;
    c.epsilon = 0.2;  // T = N^0.3 leaves a few large entries at N = 400
    c.ensembles = {{"pareto45", EntryDistribution::pareto_sym(4.5), gdiag}};
  } else if (kind == "tw-table") {
    c.trials = 1;
  } else {
    throw ConfigError("unknown experiment kind: " + kind);
  }
  return c;
}

}  // namespace rmtedge::harness
