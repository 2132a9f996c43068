#pragma once

// Seeded random streams that are bit-reproducible across platforms.
// std::*_distribution output is implementation-defined, so the samplers
// here draw raw 64-bit words from std::mt19937_64 and transform them.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace cutsurv {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed expansion: derive_seed(seed, a, b, ...) gives an
/// independent stream key for every (seed, counters) tuple.
inline std::uint64_t derive_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter, Rest... rest) {
  return derive_seed(splitmix64(seed ^ splitmix64(counter + 0x632be59bd9b4e019ULL)), rest...);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cutsurv
