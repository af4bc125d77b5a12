#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace lifetensor {

/// Deterministic random stream built on std::mt19937_64.
///
/// The engine output sequence is fixed by the standard, but the standard
/// distributions are not, so every distribution used by the library is
/// derived here from raw 64-bit draws. Identical seeds give bitwise-identical
/// streams on every conforming platform (Gaussian draws go through std::log
/// and std::cos and are only reproducible to libm accuracy across platforms).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on (0, 1]: 53 random bits, shifted away from zero.
  double uniform_open_closed() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform on (lo, hi].
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform_open_closed();
  }

  /// Uniform integer on [0, n) by rejection, n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() {
    const double u1 = uniform_open_closed();
    const double u2 = uniform_open_closed();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// First `count` entries of a Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (count > n) count = n;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lifetensor
