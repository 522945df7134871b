#ifndef REPLAB_RNG_HPP
#define REPLAB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace replab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Fold a tag into a seed (hash_combine style). Chaining derive_seed calls
// yields independent named streams from one root seed, so consumers of one
// stream cannot perturb another.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ (splitmix64(tag) + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2)));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c) {
  return derive_seed(derive_seed(seed, a, b), c);
}

// Named stream tags used throughout the training pipeline.
namespace stream {
inline constexpr std::uint64_t init = 0x11;
inline constexpr std::uint64_t data = 0x22;
inline constexpr std::uint64_t noise = 0x33;
inline constexpr std::uint64_t replay = 0x44;
inline constexpr std::uint64_t restart = 0x55;
inline constexpr std::uint64_t eval = 0x66;
inline constexpr std::uint64_t buffer = 0x77;
}  // namespace stream

// Deterministic RNG. All floating-point draws are built directly on the raw
// mt19937_64 output rather than the standard <random> distributions, whose
// sequences are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (cosine branch); always consumes two
  // uniforms so the draw count per call is fixed.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n); unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t bound = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x = eng_();
    while (x >= bound) x = eng_();
    return x % n;
  }

  std::vector<double> normal_vec(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal();
    return v;
  }

  Rng fork(std::uint64_t tag) { return Rng(derive_seed(eng_(), tag)); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace replab

#endif  // REPLAB_RNG_HPP
