#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace dcl {

// Splitmix64 generator. Small, fast, and identical on every platform, which
// is what keeps runs byte-for-byte reproducible for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 bits of mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. Draws two uniforms per call; no cached
  // spare, so the consumed stream length is predictable.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  std::vector<double> gaussian_vec(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = gaussian();
    return v;
  }

  // Integer in [0, n). Modulo bias is ~n/2^64, irrelevant at our sizes.
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  // Derive an independent sub-seed (advances this stream by one draw).
  std::uint64_t fork() { return next_u64(); }

 private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::uint64_t state_;
};

}  // namespace dcl
