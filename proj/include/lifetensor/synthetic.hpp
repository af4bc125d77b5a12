#pragma once

// Planted low-rank tensors for validating the fitting pipeline without real
// sensor data.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lifetensor/cp_model.hpp"
#include "lifetensor/dataset.hpp"
#include "lifetensor/random.hpp"

namespace lifetensor {

struct SynthSpec {
  Dims dims{20, 30, 25};
  std::size_t rank = 3;
  std::optional<double> noise_snr_db;
  double missing_frac = 0.0;
  std::uint64_t seed = 0;
  double factor_sparsity = 0.0;

  void validate() const {
    detail::require(dims[0] > 0 && dims[1] > 0 && dims[2] > 0, "dimensions must be positive");
    detail::require(rank >= 1, "rank must be at least 1");
    detail::require(missing_frac >= 0.0 && missing_frac < 1.0, "missing_frac must be in [0, 1)");
    detail::require(factor_sparsity >= 0.0 && factor_sparsity < 1.0,
                    "factor_sparsity must be in [0, 1)");
    if (noise_snr_db) detail::require(std::isfinite(*noise_snr_db), "noise SNR must be finite");
  }

  /// Non-fatal remarks about the configuration.
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    for (std::size_t m = 0; m < 3; ++m)
      if (dims[m] < rank)
        w.push_back("dimension " + std::to_string(m + 1) + " (" + std::to_string(dims[m]) +
                    ") is smaller than the rank (" + std::to_string(rank) + ")");
    return w;
  }
};

struct SynthResult {
  TensorDataset dataset;
  CPModel truth;
  /// SNR of the added noise before clipping at zero; nullopt when noiseless.
  std::optional<double> realized_snr_db;
  std::size_t masked_cells = 0;
};

/// Number of cells masked for a given fraction: floor(fraction * n).
inline std::size_t masked_cell_count(double fraction, std::size_t n) {
  // The relative nudge keeps products such as 0.05 * 269280 from landing a
  // hair below an exact integer.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) * (1.0 + 1e-12)));
}

/// Draw order from Rng(seed): U, V, T entries (column-major), then the zeroed
/// positions per factor column, then lambda, then per-entry noise (linear
/// order), then the masked cells.
inline SynthResult gen_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto r = static_cast<Eigen::Index>(spec.rank);

  CPModel truth;
  Matrix* factors[3] = {&truth.u, &truth.v, &truth.t};
  for (std::size_t mode = 0; mode < 3; ++mode) {
    Matrix& f = *factors[mode];
    f.resize(static_cast<Eigen::Index>(spec.dims[mode]), r);
    for (Eigen::Index c = 0; c < r; ++c)
      for (Eigen::Index i = 0; i < f.rows(); ++i) f(i, c) = rng.uniform_open_closed();
  }
  if (spec.factor_sparsity > 0.0) {
    for (std::size_t mode = 0; mode < 3; ++mode) {
      Matrix& f = *factors[mode];
      const auto rows = static_cast<std::size_t>(f.rows());
      const std::size_t zeros =
          std::min(rows - 1, static_cast<std::size_t>(std::floor(spec.factor_sparsity * rows)));
      for (Eigen::Index c = 0; c < r; ++c)
        for (std::size_t i : rng.sample_without_replacement(rows, zeros))
          f(static_cast<Eigen::Index>(i), c) = 0.0;
    }
  }
  for (Matrix* f : factors) f->colwise().normalize();
  truth.lambda.resize(r);
  for (Eigen::Index c = 0; c < r; ++c) truth.lambda(c) = rng.uniform(1.0, 10.0);
  truth = normalize_columns(truth);

  SynthResult out;
  out.truth = truth;
  Tensor3 x = reconstruct(truth);
  if (spec.noise_snr_db) {
    std::vector<double> noise(x.size());
    double noise_ss = 0.0;
    for (double& e : noise) {
      e = rng.normal();
      noise_ss += e * e;
    }
    const double signal_norm = frobenius_norm(x);
    const double target_noise_norm = signal_norm / std::pow(10.0, *spec.noise_snr_db / 20.0);
    const double scale = target_noise_norm / std::sqrt(noise_ss);
    double scaled_ss = 0.0;
    auto values = x.values();
    for (std::size_t n = 0; n < values.size(); ++n) {
      const double e = scale * noise[n];
      scaled_ss += e * e;
      values[n] = std::max(0.0, values[n] + e);
    }
    out.realized_snr_db = 10.0 * std::log10(signal_norm * signal_norm / scaled_ss);
  }
  out.masked_cells = masked_cell_count(spec.missing_frac, x.size());
  for (std::size_t cell : rng.sample_without_replacement(x.size(), out.masked_cells)) {
    x.values()[cell] = std::numeric_limits<double>::quiet_NaN();
    x.mask()[cell] = 0;
  }
  out.dataset.tensor = std::move(x);
  out.dataset.labels = AxisLabels::generic(spec.dims);
  return out;
}

}  // namespace lifetensor
