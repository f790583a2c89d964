#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace momlab {

/// SplitMix64 finalizer; used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for substream (a, b) of a master seed. Distinct (a, b) pairs give
/// statistically independent streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Portable random source: mt19937_64 engine (its output sequence is fixed by
/// the standard) with hand-rolled uniform, index and Gaussian transforms, so
/// the same seed yields the same variates on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on {0, ..., n-1}; rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t n);
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace momlab
