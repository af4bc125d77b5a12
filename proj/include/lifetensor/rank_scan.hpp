#pragma once

// Rank selection from the core-consistency curve.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lifetensor/corcondia.hpp"
#include "lifetensor/hals.hpp"
#include "lifetensor/parallel.hpp"

namespace lifetensor {

struct RankScan {
  std::vector<std::size_t> ranks;
  std::vector<double> mean_cc;                // over clamped samples
  std::vector<std::optional<double>> std_cc;  // empty when every sample was negative
  std::vector<std::size_t> n_init;            // samples that contributed
  /// Raw (unclamped) core consistency per rank, one entry per usable init.
  std::vector<std::vector<double>> raw_cc;
  std::vector<std::string> warnings;
};

struct RankScanOptions {
  std::size_t n_init = 10;
  std::uint64_t seed = 0;
  std::size_t max_sweeps = 500;
  double tol = 1e-8;
  std::size_t threads = 1;
};

/// Fits n_init models per rank (seeds seed, seed+1, ...), clamps negative
/// core-consistency samples to zero, and reports their mean and population
/// standard deviation. Fits whose diagnostic fails are skipped with a warning.
inline RankScan rank_scan(const Tensor3& x, const std::vector<std::size_t>& ranks,
                          const RankScanOptions& opt) {
  detail::require(!ranks.empty(), "rank_scan: no ranks given");
  detail::require(std::is_sorted(ranks.begin(), ranks.end()) &&
                      std::adjacent_find(ranks.begin(), ranks.end()) == ranks.end(),
                  "rank_scan: ranks must be strictly ascending");
  detail::require(ranks.front() >= 1, "rank_scan: ranks must be positive");
  detail::require(opt.n_init >= 1, "rank_scan: n_init must be at least 1");

  const std::size_t cells = ranks.size() * opt.n_init;
  std::vector<std::optional<double>> samples(cells);
  std::vector<std::string> failures(cells);
  parallel_for(cells, opt.threads, [&](std::size_t cell) {
    const std::size_t ri = cell / opt.n_init;
    const std::size_t init = cell % opt.n_init;
    FitConfig cfg;
    cfg.rank = ranks[ri];
    cfg.seed = opt.seed + init;
    cfg.max_sweeps = opt.max_sweeps;
    cfg.tol = opt.tol;
    cfg.n_restarts = 1;
    try {
      const FitResult f = fit(x, cfg);
      samples[cell] = corcondia(x, f.model);
    } catch (const NumericalError& e) {
      failures[cell] = "rank " + std::to_string(ranks[ri]) + " seed " +
                       std::to_string(cfg.seed) + ": " + e.what();
    }
  });

  RankScan scan;
  scan.ranks = ranks;
  for (std::size_t ri = 0; ri < ranks.size(); ++ri) {
    std::vector<double> raw;
    for (std::size_t init = 0; init < opt.n_init; ++init) {
      const std::size_t cell = ri * opt.n_init + init;
      if (samples[cell]) raw.push_back(*samples[cell]);
      else scan.warnings.push_back("excluded fit: " + failures[cell]);
    }
    double mean = 0.0;
    std::optional<double> sd;
    if (!raw.empty()) {
      std::size_t negative = 0;
      for (double c : raw) {
        mean += std::max(0.0, c);
        negative += (c < 0.0);
      }
      mean /= static_cast<double>(raw.size());
      if (negative < raw.size()) {
        double ss = 0.0;
        for (double c : raw) ss += (std::max(0.0, c) - mean) * (std::max(0.0, c) - mean);
        sd = std::sqrt(ss / static_cast<double>(raw.size()));
      }
    } else {
      scan.warnings.push_back("rank " + std::to_string(ranks[ri]) + ": no usable fits");
    }
    scan.mean_cc.push_back(std::min(100.0, mean));
    scan.std_cc.push_back(sd);
    scan.n_init.push_back(raw.size());
    scan.raw_cc.push_back(std::move(raw));
  }
  return scan;
}

/// The interior rank with the most negative second difference of mean_cc
/// (the sharpest drop in slope). Near-ties within 1e-9 go to the smaller rank.
inline std::size_t select_rank(const RankScan& scan) {
  const auto& r = scan.ranks;
  const auto& c = scan.mean_cc;
  if (r.size() < 3 || c.size() != r.size())
    throw UsageError("select_rank: need at least 3 scanned ranks");
  for (std::size_t i = 1; i < r.size(); ++i)
    if (r[i] != r[i - 1] + 1) throw UsageError("select_rank: scanned ranks must be consecutive");
  std::size_t best = 1;
  double best_d2 = c[2] - 2.0 * c[1] + c[0];
  for (std::size_t i = 2; i + 1 < r.size(); ++i) {
    const double d2 = c[i + 1] - 2.0 * c[i] + c[i - 1];
    if (d2 < best_d2 - 1e-9) {
      best = i;
      best_d2 = d2;
    }
  }
  return r[best];
}

}  // namespace lifetensor
