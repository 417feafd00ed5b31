#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mf {

// Deterministic RNG used everywhere randomness is needed.
//
// std::mt19937_64 output is fully specified by the standard, but the
// std::*_distribution adapters are not, so all distributions here are
// hand-rolled on top of the raw 64-bit stream. Same seed, same sequence,
// on every platform and build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound) via rejection; bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  long long next_in_range(long long lo, long long hi) {  // half-open [lo, hi)
    return lo + static_cast<long long>(
                    next_below(static_cast<std::uint64_t>(hi - lo)));
  }

  // Uniform double in [0, 1) with 53 bits of randomness.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Box-Muller; one value per call, no cached state.
  double next_gaussian() {
    double u1;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer, used to derive independent seeds from (base, tag)
// pairs so that training randomness is a pure function of (seed, step).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mf
