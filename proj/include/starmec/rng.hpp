#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace starmec::rng {

// Counter-based generator built on the splitmix64 output function.
// Streams are addressed by (master seed, tag words); draws are indexed
// by a counter, so adding streams never perturbs existing ones and the
// same seed reproduces bit-identical sequences on every platform.
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_key(std::uint64_t master, std::uint64_t a,
                                std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t k = mix64(master + kGolden);
  k = mix64(k ^ mix64(a + 0x0123456789abcdefULL));
  k = mix64(k ^ mix64(b + 0xfedcba9876543210ULL));
  k = mix64(k ^ mix64(c + 0x5555aaaa5555aaaaULL));
  return k;
}

class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform on (0,1]; never returns 0 so log() is safe.
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
  }

  // Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Circularly-symmetric complex Gaussian with E|z|^2 = 1.
  std::complex<double> cnormal() {
    const double s = 0.7071067811865475244;  // 1/sqrt(2)
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace starmec::rng
