#pragma once

#include <cstdint>
#include <random>

namespace ctrepro {

// Seeded generator with a fixed, platform-independent output contract:
//  - raw bits come from std::mt19937_64, whose sequence the standard fixes;
//  - uniform01() takes the top 53 bits, giving k * 2^-53 in [0, 1);
//  - normal() uses the Marsaglia polar method on uniform01() pairs and caches
//    the second variate;
//  - index(n) uses rejection sampling, no modulo bias.
// The std:: distributions are avoided because their algorithms are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t index(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

// Seed for the (a, b) substream of a master seed, e.g. (participant,
// condition). Depends only on its arguments, so substreams can be drawn in
// any order or concurrently.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

}  // namespace ctrepro
