#ifndef HRANK_RNG_HPP_
#define HRANK_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hrank {

// Deterministic random source. All sampling goes through hand-rolled
// transforms (not std distributions) so that a given seed produces the
// same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, bound). Rejection-free modulo bias is irrelevant here
  // (bound << 2^64), so plain modulo keeps the stream simple.
  std::uint64_t uniform_u64(std::uint64_t bound) { return engine_() % bound; }

  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(uniform_u64(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double uniform_real() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Box-Muller; one value per call, the sibling is discarded to keep the
  // stream position independent of call parity.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform_real();
    double u2 = uniform_real();
    while (u1 <= 0.0) u1 = uniform_real();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * z;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {  // Fisher-Yates
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_u64(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hrank

#endif  // HRANK_RNG_HPP_
