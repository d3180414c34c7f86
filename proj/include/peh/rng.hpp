#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace peh {

// splitmix64 step; used to derive stream seeds from (base seed, index) pairs
// so parallel work items get decorrelated, order-independent generators.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) ^ splitmix64(index + 0x517cc1b727220a95ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t base, std::uint64_t index = 0) {
  return std::mt19937_64(mix_seed(base, index));
}

// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Box-Muller standard-normal sampler. Hand-rolled (instead of
// std::normal_distribution) so draws are identical across standard-library
// implementations; caches the second variate of each pair.
class NormalSampler {
 public:
  double operator()(std::mt19937_64& g) {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1;
    do {
      u1 = uniform01(g);
    } while (u1 <= 0.0);
    const double u2 = uniform01(g);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * 3.141592653589793238462643383279502884 * u2;
    cached_ = r * std::sin(th);
    has_cached_ = true;
    return r * std::cos(th);
  }

 private:
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace peh
