#pragma once

#include <cstdint>
#include <random>

namespace emstress {

// SplitMix64 finaliser. Derived seeds for item i of a run are
// mix_seed(seed, i) = splitmix64(seed ^ splitmix64(i + 0x9E3779B97F4A7C15)).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// Portable random source: std::mt19937_64 output is fixed by the standard, but
// the std distributions are not, so bounded draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [lo, hi], rejection sampled.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  bool coin() { return (next() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace emstress
