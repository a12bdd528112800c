#pragma once

// Portable pseudo-random numbers.
//
// The engine is xoshiro256** (Blackman & Vigna, 2018) seeded through
// SplitMix64. All distributions below are implemented here rather than taken
// from <random>, whose distribution algorithms are implementation-defined, so
// a given seed yields the same stream with every standard library.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace geofair {

std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministically derives an independent seed for sub-unit `index` of
/// `stream` (e.g. tree 17 of a forest, state 4 of a generator run).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  double normal();
  double normal(double mean, double sd);
  double lognormal(double mu, double sigma);
  /// Marsaglia-Tsang; shape > 0, unit scale.
  double gamma(double shape);
  double beta(double a, double b);
  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace geofair
