#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace stylemux {

// Deterministic RNG used everywhere randomness is needed. Wraps mt19937_64
// (whose raw bit stream is pinned by the standard) and derives floats and
// bounded ints with our own arithmetic, so results do not depend on the
// standard library's unspecified distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, n). Modulo bias is far below anything observable here.
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates, descending, so results are reproducible across platforms.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_u64() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent generator for a named sub-stream.
  Rng fork(uint64_t stream) {
    uint64_t s = next_u64() ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    return Rng(s);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace stylemux
