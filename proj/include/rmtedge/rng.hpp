#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace rmtedge {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the i-th output is a pure function of (key, i).
///
/// Substreams are derived with split(), which hashes the parent key together
/// with a child index, so that trial t of an experiment always sees the same
/// stream no matter which thread runs it or in what order. Satisfies the
/// UniformRandomBitGenerator requirements, so it plugs into <random>.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t key = 0) noexcept : key_(mix64(key ^ kSeedSalt)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    // Two rounds: a single finalizer on key + counter * gamma shows weak
    // correlations between adjacent keys.
    return mix64(mix64(key_ + kGamma * ++counter_) ^ key_);
  }

  /// Independent child stream number `index`.
  [[nodiscard]] constexpr CounterRng split(std::uint64_t index) const noexcept {
    CounterRng child;
    child.key_ = mix64(key_ ^ mix64(index + kGamma));
    return child;
  }

  /// Uniform double on the open interval (0, 1), 53 bits of resolution.
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Fair random sign.
  double sign() noexcept { return ((*this)() >> 63) ? -1.0 : 1.0; }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x6a09e667f3bcc909ULL;

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Stream for trial `trial` of an experiment seeded with `base_seed`.
inline CounterRng trial_stream(std::uint64_t base_seed, std::uint64_t trial) noexcept {
  return CounterRng(base_seed).split(trial);
}

}  // namespace rmtedge
