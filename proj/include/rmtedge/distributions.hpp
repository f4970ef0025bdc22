#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rmtedge/errors.hpp"
#include "rmtedge/rng.hpp"

namespace rmtedge {

// Entry laws. Each off-diagonal kind is standardized to mean 0, variance 1.

struct Gaussian {
  double variance = 1.0;
};

struct Rademacher {};

/// Symmetric Pareto: |x| = s0 U^{-1/alpha} with a random sign, where
/// s0 = sqrt((alpha - 2) / alpha) makes E x^2 = 1.
struct ParetoSym {
  double alpha = 4.5;
  [[nodiscard]] double scale() const { return std::sqrt((alpha - 2.0) / alpha); }
};

/// Symmetric law with P(R > r) = e^4 / (r^4 log r) for r >= e, rescaled to
/// unit variance. The fourth moment diverges while s^4 P(|x| > s) -> 0.
struct MarginalLog {
  /// E R^2 = e^2 + 2 e^4 E1(2).
  static double raw_second_moment() {
    static const double v = std::exp(2.0) + 2.0 * std::exp(4.0) * -std::expint(-2.0);
    return v;
  }
  static double scale() {
    static const double s = std::sqrt(raw_second_moment());
    return s;
  }
  /// Survival function of the unscaled radius R.
  static double radius_tail(double r) {
    constexpr double e = std::numbers::e;
    if (r <= e) return 1.0;
    return std::exp(4.0) / (std::pow(r, 4) * std::log(r));
  }
  /// Inverts radius_tail(r) = u for u in (0, 1]. In y = log r the equation
  /// reads 4y + log y = 4 - log u, monotone for y >= 1.
  static double radius_quantile(double u) {
    const double c = 4.0 - std::log(u);
    double lo = 1.0;
    double hi = std::max(2.0, c / 4.0 + 1.0);
    double y = std::clamp(c / 4.0, lo, hi);
    for (int it = 0; it < 100; ++it) {
      const double f = 4.0 * y + std::log(y) - c;
      if (f > 0.0) {
        hi = y;
      } else {
        lo = y;
      }
      if (std::abs(f) <= 1e-15 * c) break;
      double next = y - f / (4.0 + 1.0 / y);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - y) <= 1e-16 * y) {
        y = next;
        break;
      }
      y = next;
    }
    return std::exp(y);
  }
};

/// Finitely supported law. `A`/`B` record the requested third and fourth
/// moments when the law came from the four-moment matcher.
struct Discrete {
  std::vector<double> atoms;
  std::vector<double> weights;
  bool from_four_moment = false;
  double A = 0.0;
  double B = 0.0;
};

class EntryDistribution {
 public:
  using Law = std::variant<Gaussian, Rademacher, ParetoSym, MarginalLog, Discrete>;

  EntryDistribution() : law_(Gaussian{1.0}) {}
  explicit EntryDistribution(Law law) : law_(std::move(law)) { validate(); }

  static EntryDistribution gaussian(double variance = 1.0) { return EntryDistribution(Gaussian{variance}); }
  static EntryDistribution rademacher() { return EntryDistribution(Rademacher{}); }
  static EntryDistribution pareto_sym(double alpha) { return EntryDistribution(ParetoSym{alpha}); }
  static EntryDistribution marginal_log() { return EntryDistribution(MarginalLog{}); }
  static EntryDistribution discrete(std::vector<double> atoms, std::vector<double> weights) {
    return EntryDistribution(Discrete{std::move(atoms), std::move(weights)});
  }

  [[nodiscard]] const Law& law() const noexcept { return law_; }

  template <class T>
  [[nodiscard]] bool is() const noexcept {
    return std::holds_alternative<T>(law_);
  }

  [[nodiscard]] bool symmetric() const {
    if (const auto* d = std::get_if<Discrete>(&law_)) {
      for (std::size_t i = 0; i < d->atoms.size(); ++i) {
        double w_mirror = 0.0;
        for (std::size_t k = 0; k < d->atoms.size(); ++k) {
          if (d->atoms[k] == -d->atoms[i]) w_mirror += d->weights[k];
        }
        if (std::abs(w_mirror - d->weights[i]) > 1e-15) return false;
      }
    }
    return true;
  }

  double sample(CounterRng& rng) const {
    return std::visit([&](const auto& law) { return draw(law, rng); }, law_);
  }

  /// P(|x| >= s).
  [[nodiscard]] double tail_probability(double s) const {
    return std::visit([&](const auto& law) { return tail(law, s, true); }, law_);
  }

  /// P(|x| > s).
  [[nodiscard]] double strict_tail_probability(double s) const {
    return std::visit([&](const auto& law) { return tail(law, s, false); }, law_);
  }

  /// s^4 P(|x| >= s), the quantity whose vanishing limit decides edge
  /// universality.
  [[nodiscard]] double tail_functional(double s) const {
    if (!(s > 0.0)) throw std::invalid_argument("tail_functional: need s > 0");
    return std::pow(s, 4) * tail_probability(s);
  }

  /// E[1(|x| > T) x]. Zero for every symmetric law.
  [[nodiscard]] double truncated_mean(double T) const {
    if (const auto* d = std::get_if<Discrete>(&law_)) {
      long double acc = 0.0L;
      for (std::size_t i = 0; i < d->atoms.size(); ++i) {
        if (std::abs(d->atoms[i]) > T) acc += static_cast<long double>(d->weights[i]) * d->atoms[i];
      }
      return static_cast<double>(acc);
    }
    return 0.0;
  }

  /// E x^k. +infinity when the moment diverges.
  [[nodiscard]] double raw_moment(int k) const {
    if (k < 0) throw std::invalid_argument("raw_moment: need k >= 0");
    return std::visit([&](const auto& law) { return moment(law, k); }, law_);
  }

  /// Draw from the law conditioned on |x| <= T.
  double sample_below(double T, CounterRng& rng) const {
    if (!(strict_tail_probability(T) < 1.0)) {
      throw std::invalid_argument("sample_below: no mass inside the cutoff");
    }
    if (const auto* p = std::get_if<ParetoSym>(&law_)) {
      // Inverse CDF of the truncated Pareto radius.
      const double s0 = p->scale();
      const double tail_T = std::pow(s0 / T, p->alpha);
      const double u = tail_T + (1.0 - tail_T) * rng.uniform_open();
      return rng.sign() * s0 * std::pow(u, -1.0 / p->alpha);
    }
    for (int attempt = 0; attempt < 1'000'000; ++attempt) {
      const double x = sample(rng);
      if (std::abs(x) <= T) return x;
    }
    throw NumericalError("sample_below: rejection sampler did not terminate");
  }

  /// Text form used in configuration files, e.g. "pareto_sym(4.5)".
  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& law) {
          using T = std::decay_t<decltype(law)>;
          if constexpr (std::is_same_v<T, Gaussian>) {
            os << "gaussian(" << law.variance << ")";
          } else if constexpr (std::is_same_v<T, Rademacher>) {
            os << "rademacher";
          } else if constexpr (std::is_same_v<T, ParetoSym>) {
            os << "pareto_sym(" << law.alpha << ")";
          } else if constexpr (std::is_same_v<T, MarginalLog>) {
            os << "marginal_log";
          } else if (law.from_four_moment) {
            os << "bounded_four_moment(" << law.A << "," << law.B << ")";
          } else {
            os << "discrete(";
            for (std::size_t i = 0; i < law.atoms.size(); ++i) {
              if (i) os << ",";
              os << law.atoms[i] << ":" << law.weights[i];
            }
            os << ")";
          }
        },
        law_);
    return os.str();
  }

 private:
  void validate() const {
    if (const auto* g = std::get_if<Gaussian>(&law_); g && !(g->variance >= 0.0)) {
      throw std::invalid_argument("gaussian variance must be >= 0");
    }
    if (const auto* p = std::get_if<ParetoSym>(&law_); p && !(p->alpha > 2.0)) {
      throw std::invalid_argument("pareto_sym needs tail index alpha > 2");
    }
    if (const auto* d = std::get_if<Discrete>(&law_)) {
      if (d->atoms.empty() || d->atoms.size() != d->weights.size()) {
        throw std::invalid_argument("discrete law needs matching nonempty atoms and weights");
      }
      double total = 0.0;
      for (double w : d->weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("discrete weights must be nonnegative");
        total += w;
      }
      if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("discrete weights must sum to 1");
    }
  }

  static double draw(const Gaussian& g, CounterRng& rng) {
    if (g.variance == 0.0) return 0.0;
    std::normal_distribution<double> normal(0.0, std::sqrt(g.variance));
    return normal(rng);
  }
  static double draw(const Rademacher&, CounterRng& rng) { return rng.sign(); }
  static double draw(const ParetoSym& p, CounterRng& rng) {
    return rng.sign() * p.scale() * std::pow(rng.uniform_open(), -1.0 / p.alpha);
  }
  static double draw(const MarginalLog&, CounterRng& rng) {
    return rng.sign() * MarginalLog::radius_quantile(rng.uniform_open()) / MarginalLog::scale();
  }
  static double draw(const Discrete& d, CounterRng& rng) {
    const double u = rng.uniform_open();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < d.atoms.size(); ++i) {
      acc += d.weights[i];
      if (u < acc) return d.atoms[i];
    }
    return d.atoms.back();
  }

  static double tail(const Gaussian& g, double s, bool) {
    if (s <= 0.0) return 1.0;
    if (g.variance == 0.0) return 0.0;
    return std::erfc(s / std::sqrt(2.0 * g.variance));
  }
  static double tail(const Rademacher&, double s, bool inclusive) {
    return (inclusive ? s <= 1.0 : s < 1.0) ? 1.0 : 0.0;
  }
  static double tail(const ParetoSym& p, double s, bool) {
    const double s0 = p.scale();
    return s <= s0 ? 1.0 : std::pow(s0 / s, p.alpha);
  }
  static double tail(const MarginalLog&, double s, bool) {
    return MarginalLog::radius_tail(s * MarginalLog::scale());
  }
  static double tail(const Discrete& d, double s, bool inclusive) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < d.atoms.size(); ++i) {
      const double a = std::abs(d.atoms[i]);
      if (inclusive ? a >= s : a > s) acc += d.weights[i];
    }
    return static_cast<double>(acc);
  }

  static double moment(const Gaussian& g, int k) {
    if (k % 2) return 0.0;
    double m = 1.0;  // (k-1)!! sigma^k
    for (int j = k - 1; j > 0; j -= 2) m *= j;
    return m * std::pow(g.variance, k / 2);
  }
  static double moment(const Rademacher&, int k) { return k % 2 ? 0.0 : 1.0; }
  static double moment(const ParetoSym& p, int k) {
    if (k % 2) return 0.0;
    if (k >= p.alpha) return std::numeric_limits<double>::infinity();
    return p.alpha * std::pow(p.scale(), k) / (p.alpha - k);
  }
  static double moment(const MarginalLog&, int k) {
    if (k % 2) return 0.0;
    if (k == 0) return 1.0;
    if (k == 2) return 1.0;
    return std::numeric_limits<double>::infinity();
  }
  static double moment(const Discrete& d, int k) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < d.atoms.size(); ++i) {
      long double p = 1.0L;
      for (int j = 0; j < k; ++j) p *= d.atoms[i];
      acc += d.weights[i] * p;
    }
    return static_cast<double>(acc);
  }

  Law law_;
};

/// Parses the text produced by EntryDistribution::describe(). The
/// four-moment form is resolved by the caller-supplied factory so this
/// header does not depend on the matcher.
template <class FourMomentFactory>
EntryDistribution parse_distribution(const std::string& text, FourMomentFactory&& four_moment) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  const auto open = s.find('(');
  const std::string name = s.substr(0, open);
  std::vector<std::string> args;
  if (open != std::string::npos) {
    if (s.back() != ')') throw ConfigError("unterminated distribution descriptor: " + text);
    std::string inner = s.substr(open + 1, s.size() - open - 2);
    std::stringstream ss(inner);
    std::string tok;
    while (std::getline(ss, tok, ',')) args.push_back(tok);
  }
  auto number = [&](const std::string& tok) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + tok + "' in distribution descriptor: " + text);
    }
  };
  auto expect_args = [&](std::size_t n) {
    if (args.size() != n) throw ConfigError("wrong argument count in distribution descriptor: " + text);
  };
  try {
    if (name == "gaussian") {
      if (args.empty()) return EntryDistribution::gaussian(1.0);
      expect_args(1);
      return EntryDistribution::gaussian(number(args[0]));
    }
    if (name == "rademacher") {
      expect_args(0);
      return EntryDistribution::rademacher();
    }
    if (name == "pareto_sym") {
      expect_args(1);
      return EntryDistribution::pareto_sym(number(args[0]));
    }
    if (name == "marginal_log") {
      expect_args(0);
      return EntryDistribution::marginal_log();
    }
    if (name == "bounded_four_moment") {
      expect_args(2);
      return four_moment(number(args[0]), number(args[1]));
    }
    if (name == "discrete") {
      std::vector<double> atoms;
      std::vector<double> weights;
      for (const auto& a : args) {
        const auto colon = a.find(':');
        if (colon == std::string::npos) throw ConfigError("discrete atoms are written value:weight: " + text);
        atoms.push_back(number(a.substr(0, colon)));
        weights.push_back(number(a.substr(colon + 1)));
      }
      return EntryDistribution::discrete(std::move(atoms), std::move(weights));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid distribution '") + text + "': " + e.what());
  }
  throw ConfigError("unknown distribution kind: " + text);
}

}  // namespace rmtedge
