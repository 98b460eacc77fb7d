#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace granq {

// SplitMix64 (Steele, Lea & Flood 2014): output i is a bijective mix of
// seed + (i + 1) * 0x9e3779b97f4a7c15, so streams are fully determined by the
// seed and reproducible in any language with 64-bit unsigned arithmetic.
//
// Derived draws:
//   uniform()  (next() >> 11) * 2^-53, in [0, 1)
//   index(n)   high 64 bits of next() * n (128-bit product), in [0, n)
//   normal()   Box-Muller on two uniforms, cosine branch only
//
// Reference outputs for seed 1234567: 6457827717110365317,
// 3203168211198807973, 9817491932198370423.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  constexpr explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += kGamma;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace granq
