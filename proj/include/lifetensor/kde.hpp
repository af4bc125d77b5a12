#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "lifetensor/stats.hpp"

namespace lifetensor {

struct KDECurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  std::size_t sample_size = 0;
};

namespace detail {

// Linear-interpolation quantile of sorted data (type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Rule-of-thumb bandwidth 1.06 * min(s, IQR / 1.34) * n^(-1/5). A zero IQR
/// falls back to s alone; a zero spread falls back to max(1e-3, 1e-3 |mean|).
inline double kde_bandwidth(const std::vector<double>& values) {
  if (values.size() < 2) throw UsageError("kde: need at least 2 values");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double s = std::sqrt(detail::sample_variance(values));
  const double iqr = detail::quantile_sorted(sorted, 0.75) - detail::quantile_sorted(sorted, 0.25);
  double spread = iqr > 0.0 ? std::min(s, iqr / 1.34) : s;
  const double h = 1.06 * spread * std::pow(static_cast<double>(values.size()), -0.2);
  if (h > 0.0) return h;
  return std::max(1e-3, 1e-3 * std::abs(detail::mean(values)));
}

/// Gaussian kernel density estimate on `grid_size` equally spaced points over
/// [min - span_factor * h, max + span_factor * h].
inline KDECurve kde(const SampleGroup& sample, std::size_t grid_size = 256, double span_factor = 4.0) {
  detail::check_finite(sample);
  if (sample.size() < 2) throw UsageError("kde: need at least 2 values");
  if (grid_size < 2) throw UsageError("kde: grid_size must be at least 2");
  if (!(span_factor >= 0.0)) throw UsageError("kde: span_factor must be non-negative");
  KDECurve curve;
  curve.sample_size = sample.size();
  curve.bandwidth = kde_bandwidth(sample.values);
  const double h = curve.bandwidth;
  const auto [lo_it, hi_it] = std::minmax_element(sample.values.begin(), sample.values.end());
  const double lo = *lo_it - span_factor * h;
  const double hi = *hi_it + span_factor * h;
  const double step = (hi - lo) / static_cast<double>(grid_size - 1);
  const double norm = 1.0 / (static_cast<double>(sample.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  curve.grid.resize(grid_size);
  curve.density.resize(grid_size);
  for (std::size_t g = 0; g < grid_size; ++g) {
    const double x = g + 1 == grid_size ? hi : lo + step * static_cast<double>(g);
    double sum = 0.0;
    for (double xi : sample.values) {
      const double z = (x - xi) / h;
      sum += std::exp(-0.5 * z * z);
    }
    curve.grid[g] = x;
    curve.density[g] = norm * sum;
  }
  return curve;
}

/// Trapezoidal integral of a curve over its grid.
inline double trapezoid_integral(const KDECurve& c) {
  double total = 0.0;
  for (std::size_t g = 1; g < c.grid.size(); ++g)
    total += 0.5 * (c.density[g] + c.density[g - 1]) * (c.grid[g] - c.grid[g - 1]);
  return total;
}

}  // namespace lifetensor
