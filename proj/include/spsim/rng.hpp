#pragma once

#include <cstdint>
#include <cmath>

namespace spsim {

// Counter-based RNG: every simulation period gets its own stream derived
// from (seed, stream id, period index), so results do not depend on how
// periods are sharded across threads.
namespace rngstream {
inline constexpr std::uint64_t kEmit = 1;
inline constexpr std::uint64_t kHbt = 2;
inline constexpr std::uint64_t kHom = 3;
inline constexpr std::uint64_t kDecay = 4;
inline constexpr std::uint64_t kDark = 5;
}  // namespace rngstream

inline std::uint64_t splitmix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

class PeriodRng {
 public:
  PeriodRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t period) {
    std::uint64_t h = seed + 0x9E3779B97F4A7C15ULL;
    h = splitmix64(h ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    h = splitmix64(h ^ (0x8CB92BA72F3D8DD7ULL * (period + 1)));
    state_ = h;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return splitmix64(state_);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Exponential with the given mean; mean <= 0 returns 0.
  double exponential(double mean) {
    if (mean <= 0.0) return 0.0;
    return -mean * std::log1p(-uniform());
  }

  // Box-Muller, pair cached.
  double normal(double sigma) {
    if (sigma <= 0.0) return 0.0;
    if (have_cache_) {
      have_cache_ = false;
      return cache_ * sigma;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cache_ = r * std::sin(a);
    have_cache_ = true;
    return r * std::cos(a) * sigma;
  }

 private:
  std::uint64_t state_ = 0;
  double cache_ = 0.0;
  bool have_cache_ = false;
};

}  // namespace spsim
