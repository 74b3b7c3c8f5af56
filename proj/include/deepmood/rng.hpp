// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

namespace deepmood {

/// xoshiro256** (Blackman & Vigna) seeded through splitmix64.
///
/// Every derived draw (uniform, normal, integer ranges, shuffles) is computed
/// here from the raw 64-bit stream rather than through <random>
/// distributions, whose output is implementation-defined. A given seed
/// therefore yields the same sequence on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Unbiased integer in [0, n); n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller (no cached second value).
  double normal();
  double normal(double mean, double stddev);
  /// exp(N(log_median, sigma)).
  double lognormal(double log_median, double sigma);
  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Independent child generator; used to give grid cells their own streams.
  Rng fork(std::uint64_t stream);

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
};

/// splitmix64 finaliser, exposed for seed derivation.
std::uint64_t mix_seed(std::uint64_t value);

}  // namespace deepmood
