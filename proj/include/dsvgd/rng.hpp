#pragma once

#include <cstdint>
#include <vector>

namespace dsvgd {

// Deterministic, platform-independent generator (xoshiro256** seeded via
// splitmix64). The standard <random> distributions are implementation
// defined, so sampling is done by hand to keep runs reproducible across
// toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  // Uniform on {0, ..., n-1}, unbiased (rejection sampling).
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller; no state beyond the stream position.
  double normal();

  // Exponential with rate lambda > 0.
  double exponential(double lambda);

 private:
  std::uint64_t state_[4];
};

// Child stream for run `index` of a sweep rooted at `seed`. Documented split:
// seed the child with splitmix64 iterated from (seed XOR (index+1)*PHI64).
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace dsvgd
