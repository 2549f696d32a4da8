#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bflow {

// Deterministic RNG helpers. std::mt19937_64 output is pinned by the
// standard, but the std distributions are not, so sampling is done with
// explicit arithmetic to keep datasets and checkpoints byte-identical
// across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Unbiased-enough multiply-shift draw in [0, n).
  uint64_t uniform_u64(uint64_t n) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  int uniform_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(uniform_u64(static_cast<uint64_t>(hi_inclusive - lo + 1)));
  }

  double uniform_real(double lo = 0.0, double hi = 1.0) {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  // Box-Muller; one value per call, spare discarded for simplicity.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform_real(1e-12, 1.0);
    double u2 = uniform_real();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * z;
  }

  bool bernoulli(double p) { return uniform_real() < p; }

 private:
  std::mt19937_64 engine_;
};

// splitmix64, used to derive independent substream seeds.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace bflow
