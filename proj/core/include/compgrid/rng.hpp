#pragma once

#include <cstdint>
#include <iterator>
#include <random>
#include <span>
#include <utility>

namespace compgrid {

/// Seeded random source with platform-independent draws.
///
/// The standard distributions are implementation-defined, so every draw here
/// is built directly on the raw 64-bit output of mt19937_64 (whose sequence
/// is fixed by the standard). Same seed, same numbers, on any toolchain.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Standard normal draw (Box-Muller, no cached second value).
  double normal();

  /// Index drawn proportionally to non-negative weights (linear scan).
  std::size_t categorical(std::span<const double> weights);

  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(std::distance(first, last));
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = uniform_index(i);
      using std::swap;
      swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
    }
  }

  /// Independent child generator for stream `stream`; does not advance *this.
  Rng split(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive well-separated seeds.
std::uint64_t mix_seed(std::uint64_t value);

}  // namespace compgrid
