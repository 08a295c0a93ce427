#pragma once

#include <cstdint>
#include <initializer_list>

#include "mpe/types.hpp"

namespace mpe {

/// SplitMix64: a splittable 64-bit generator. Every episode gets its own
/// stream whose seed is derived from (master seed, stream path), so results
/// never depend on the order in which episodes are generated.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits; identical on every platform.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the substream addressed by `path` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master + 0x9E3779B97F4A7C15ULL);
  for (std::uint64_t p : path) {
    h = mix64(h ^ mix64(p + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2)));
  }
  return h;
}

/// Inverse-CDF draw from a probability row. Rounding slack at the top end
/// falls to the last action with positive mass.
template <typename Row>
Index sample_categorical(const Row& probs, SplitMix64& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  Index last_positive = 0;
  for (Index i = 0; i < probs.size(); ++i) {
    const double p = static_cast<double>(probs(i));
    if (p <= 0.0) continue;
    last_positive = i;
    cumulative += p;
    if (u < cumulative) return i;
  }
  return last_positive;
}

}  // namespace mpe
