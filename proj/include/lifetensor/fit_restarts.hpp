#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lifetensor/corcondia.hpp"
#include "lifetensor/hals.hpp"
#include "lifetensor/parallel.hpp"

namespace lifetensor {

struct RestartDiagnostics {
  std::uint64_t seed = 0;
  double relative_error = 0.0;
  /// NaN when the diagnostic could not be evaluated (see `note`).
  double core_consistency = std::numeric_limits<double>::quiet_NaN();
  std::size_t sweeps = 0;
  bool converged = false;
  std::string note;
};

struct RestartResult {
  FitResult best;
  std::size_t best_index = 0;
  std::vector<RestartDiagnostics> restarts;

  double core_consistency() const { return restarts[best_index].core_consistency; }
};

namespace detail {

// Strict "a is preferred over b": higher core consistency, then lower
// relative error, then lower seed. An unevaluated diagnostic ranks last.
inline bool restart_preferred(const RestartDiagnostics& a, const RestartDiagnostics& b) {
  const double ca = std::isnan(a.core_consistency) ? -std::numeric_limits<double>::infinity()
                                                   : a.core_consistency;
  const double cb = std::isnan(b.core_consistency) ? -std::numeric_limits<double>::infinity()
                                                   : b.core_consistency;
  if (ca != cb) return ca > cb;
  if (a.relative_error != b.relative_error) return a.relative_error < b.relative_error;
  return a.seed < b.seed;
}

}  // namespace detail

/// Runs fit with seeds cfg.seed .. cfg.seed + n_restarts - 1 and keeps the
/// model with the largest core consistency. Restarts may run concurrently;
/// each owns its seed, so the selection does not depend on scheduling.
inline RestartResult fit_restarts(const Tensor3& x, const FitConfig& cfg, std::size_t threads = 1) {
  cfg.validate();
  std::vector<FitResult> fits(cfg.n_restarts);
  std::vector<RestartDiagnostics> diags(cfg.n_restarts);
  parallel_for(cfg.n_restarts, threads, [&](std::size_t i) {
    FitConfig one = cfg;
    one.seed = cfg.seed + i;
    fits[i] = fit(x, one);
    RestartDiagnostics& d = diags[i];
    d.seed = one.seed;
    d.relative_error = fits[i].trace.final_error();
    d.sweeps = fits[i].trace.sweeps_run;
    d.converged = fits[i].trace.converged;
    try {
      d.core_consistency = corcondia(x, fits[i].model);
    } catch (const NumericalError& e) {
      d.note = e.what();
    }
  });
  RestartResult out;
  for (std::size_t i = 1; i < diags.size(); ++i)
    if (detail::restart_preferred(diags[i], diags[out.best_index])) out.best_index = i;
  out.best = std::move(fits[out.best_index]);
  out.restarts = std::move(diags);
  return out;
}

}  // namespace lifetensor
