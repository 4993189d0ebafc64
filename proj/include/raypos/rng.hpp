#pragma once

// Deterministic random streams. Every stream is seeded from the master seed
// plus structural indices (what the draw is for), never from thread ids or
// iteration order, so results are reproducible at any worker count.

#include <cmath>
#include <cstdint>
#include <random>

namespace raypos {

/// splitmix64 finalizer. Good avalanche, cheap, stable across platforms.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Purpose tags keep independent streams from colliding even when their
/// structural indices coincide.
enum class StreamKind : std::uint64_t {
  positions = 1,    // UE position sampling
  measurement = 2,  // AoA noise per (sigma, position, realization)
  mc_angles = 3,    // Monte Carlo posterior angle draws
};

inline std::uint64_t stream_seed(std::uint64_t master, StreamKind kind,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ static_cast<std::uint64_t>(kind));
  s = mix64(s ^ a);
  s = mix64(s ^ b);
  s = mix64(s ^ c);
  s = mix64(s ^ d);
  return s;
}

/// mt19937_64 with hand-rolled variate transforms. std::normal_distribution
/// and friends are implementation-defined, which would break cross-platform
/// reproducibility of seeded runs; these transforms are pinned.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via the polar method; the paired variate is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * m;
    has_cached_ = true;
    return u * m;
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace raypos
