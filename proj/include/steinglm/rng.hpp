#ifndef STEINGLM_RNG_HPP
#define STEINGLM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace steinglm {

/// Stateless 64-bit mix (splitmix64 finalizer). Used to derive independent
/// substream seeds so that e.g. per-epoch shuffles never alias layer draws.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seeded RNG stream. All randomness in the library flows through explicit
/// Rng instances; there is no global state. Gaussian and shuffle are
/// hand-rolled (not std::distributions) so sequences are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Marsaglia polar method; the spare draw is cached.
  double gaussian(double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return stddev * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return stddev * u * m;
  }

  /// N(0, stddev^2) truncated to [-2*stddev, 2*stddev] by redrawing.
  /// The truncation shrinks the realized variance to ~0.887 * stddev^2.
  double truncated_gaussian(double stddev) {
    for (;;) {
      const double z = gaussian();
      if (std::abs(z) <= 2.0) return stddev * z;
    }
  }

  std::uint64_t next_u64() { return engine_(); }

  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(engine_() % static_cast<std::uint64_t>(n));
  }

  /// Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace steinglm

#endif
