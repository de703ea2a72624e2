#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gvssb {

// Deterministic RNG used throughout the library. std::mt19937_64 has a
// fully specified output sequence, but the standard distributions do not,
// so uniform/normal draws are generated with explicit algorithms to keep
// results reproducible across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix(seed)) {}

  // Independent stream for replication `index` of a run seeded with `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(seed) + 0x9e3779b97f4a7c15ULL * (index + 1));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // One draw at a time via Marsaglia polar; the spare is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
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
    return u * m;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Inverse-CDF sampling; uniform() never returns 0 exactly after the shift.
  double exponential(double rate) {
    return -std::log1p(-uniform()) / rate;
  }

  double laplace(double scale) {
    const double u = uniform() - 0.5;
    return -scale * std::copysign(std::log1p(-2.0 * std::fabs(u)), u);
  }

  // Student-t via normal / sqrt(chi2/df); chi2 from summed squared normals
  // for integer df is wasteful, so use the gamma sampler below.
  double student_t(double df) {
    const double z = normal();
    const double g = gamma(df / 2.0, 2.0);  // chi-squared(df)
    return z / std::sqrt(g / df);
  }

  // Marsaglia-Tsang for shape >= 1, boost via uniform power for shape < 1.
  double gamma(double shape, double scale) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  // Fisher-Yates over [0, n).
  template <typename IndexVec>
  void shuffle(IndexVec& idx) {
    for (std::size_t i = idx.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(gen_() % i);
      std::swap(idx[i - 1], idx[j]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer; decorrelates small consecutive seeds.
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gvssb
