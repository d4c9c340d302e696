#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace qcmm {

// splitmix64: tiny, portable, and identical across platforms for a given seed.
// Every stochastic choice in the project (init, shuffling, synthetic data)
// derives from one of these streams so runs are bit-reproducible.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double u01_open() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Box-Muller; consumes exactly two draws per call (no cached half).
  double gauss() {
    double u1 = u01_open();
    double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Fisher-Yates over indices [0, n).
  void shuffle(std::vector<int>& idx) {
    for (size_t i = idx.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next() % i);
      std::swap(idx[i - 1], idx[j]);
    }
  }

 private:
  uint64_t state_;
};

// Derives an independent stream from (seed, stream id).
inline uint64_t derive_stream(uint64_t seed, uint64_t stream) {
  SplitMix64 r(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  return r.next();
}

}  // namespace qcmm
