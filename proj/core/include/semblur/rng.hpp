#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace semblur {

// Deterministic RNG built on mt19937_64 raw output only. The standard
// distribution adaptors are implementation-defined, so doubles and bounded
// ints are derived here to keep artifacts byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1) with 53-bit resolution
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform integer in [0, n), rejection-sampled to avoid modulo bias
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // standard normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(theta);
    have_spare_ = true;
    return radius * std::cos(theta);
  }

  // independent deterministic stream for a named pipeline stage
  Rng fork(std::uint64_t stream) const {
    return Rng(seed_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace semblur
