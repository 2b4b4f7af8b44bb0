#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace b2m {

std::uint64_t splitmix64(std::uint64_t& state);

/// xoshiro256** seeded through splitmix64.
///
/// Substreams: `Rng::derive(seed, stream)` seeds a fresh generator from
/// splitmix64(seed) xor a splitmix64-scrambled stream id, so every
/// (seed, stream) pair yields an independent, reproducible sequence.
/// `jump()` advances by 2^128 draws (the reference jump polynomial) for
/// callers that prefer sequential partitioning of one stream.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);
  static Rng derive(std::uint64_t seed, std::uint64_t stream);
  static Rng from_state(const std::array<std::uint64_t, 4>& state);

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box-Muller; the second variate is cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Poisson by inversion; intended for small means (per-bin spike counts).
  std::uint64_t poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }

  void jump();
  Rng split();

  const std::array<std::uint64_t, 4>& state() const { return s_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace b2m
