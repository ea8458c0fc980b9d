#pragma once

#include <cstdint>
#include <random>

namespace luskit {

/// Portable pseudo-random source.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. The standard library distributions are implementation
/// defined, so every derived variate is computed here instead:
///   uniform01  = (next() >> 11) * 2^-53
///   below(n)   = rejection sampling on next() (no modulo bias)
///   normal     = Box-Muller, cosine branch, one draw pair per call
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p);

  double normal(double mean, double sigma);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finaliser over (seed, stream); used for per-frame sub-seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace luskit
