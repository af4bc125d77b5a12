#pragma once

// Non-negative CP fitting by hierarchical alternating least squares (HALS).
//
// Each sweep visits modes 1, 2, 3 and, within a mode, columns r = 1..R. A
// column update is the exact minimizer of the least-squares objective over
// that column subject to non-negativity, with every other block fixed:
//
//   a_r <- max(0, a_r + (M(:, r) - A G(:, r)) / max(G(r, r), eps))
//
// where M is the MTTKRP for the mode and G the Hadamard product of the other
// two Gram matrices, both weighted by lambda. lambda itself is held fixed
// during sweeps and only changes when the model is normalized.

#include <cstdint>
#include <string>
#include <vector>

#include "lifetensor/cp_model.hpp"
#include "lifetensor/random.hpp"

namespace lifetensor {

struct FitConfig {
  std::size_t rank = 1;
  std::size_t max_sweeps = 500;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::size_t n_restarts = 10;
  double epsilon_div = 1e-12;

  void validate() const {
    detail::require(rank >= 1, "rank must be at least 1");
    detail::require(tol > 0.0, "tol must be positive");
    detail::require(n_restarts >= 1, "n_restarts must be at least 1");
    detail::require(max_sweeps >= 1, "max_sweeps must be at least 1");
    detail::require(epsilon_div > 0.0, "epsilon_div must be positive");
  }
};

/// A factor column that collapsed to zero and was re-seeded.
struct ReseedEvent {
  std::size_t sweep = 0;  // 1-based sweep number (0 when called outside fit)
  int mode = 1;
  std::size_t column = 0;
};

struct FitTrace {
  double initial_error = 0.0;
  std::vector<double> relative_errors;  // one entry per completed sweep
  std::size_t sweeps_run = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  std::vector<ReseedEvent> reseeds;

  double final_error() const {
    return relative_errors.empty() ? initial_error : relative_errors.back();
  }
};

struct FitResult {
  CPModel model;
  FitTrace trace;
};

/// Random starting model: factor entries i.i.d. uniform on (0, 1], lambda = 1.
/// Entries are drawn column-major for U, then V, then T from Rng(seed).
inline CPModel init_random(const Dims& dims, std::size_t rank, std::uint64_t seed) {
  detail::require(dims[0] > 0 && dims[1] > 0 && dims[2] > 0, "dimensions must be positive");
  detail::require(rank >= 1, "rank must be at least 1");
  Rng rng(seed);
  const auto r = static_cast<Eigen::Index>(rank);
  CPModel m;
  m.lambda = Vector::Ones(r);
  Matrix* factors[3] = {&m.u, &m.v, &m.t};
  for (std::size_t mode = 0; mode < 3; ++mode) {
    Matrix& f = *factors[mode];
    f.resize(static_cast<Eigen::Index>(dims[mode]), r);
    for (Eigen::Index c = 0; c < r; ++c)
      for (Eigen::Index i = 0; i < f.rows(); ++i) f(i, c) = rng.uniform_open_closed();
  }
  return m;
}

namespace detail {

inline double tensor_mean(const Tensor3& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return s / static_cast<double>(x.size());
}

inline void check_sweep_inputs(const Tensor3& x, const CPModel& model) {
  model.validate();
  if (x.dims() != model.dims()) throw UsageError("model shape does not match tensor shape");
  if (!x.all_finite()) throw DataError("tensor contains non-finite values");
}

// One HALS sweep in place. `reseed_scale` multiplies the uniform(0,1] draws
// used to revive a column that collapsed to all zeros. Returns <x, xhat> for
// the updated model, read off the last mode's MTTKRP.
inline double hals_sweep_inplace(const Tensor3& x, CPModel& model, double epsilon_div,
                               double reseed_scale, Rng& rng, std::size_t sweep_no,
                               std::vector<ReseedEvent>* events) {
  const Eigen::Index rank = model.lambda.size();
  const Matrix lambda_outer = model.lambda * model.lambda.transpose();
  double inner = 0.0;
  for (int mode = 1; mode <= 3; ++mode) {
    Matrix& a = model.factor(mode);
    const Matrix& b = model.factor(mode == 1 ? 2 : 1);
    const Matrix& c = model.factor(mode == 3 ? 2 : 3);
    const Matrix m = mttkrp(x, model.u, model.v, model.t, mode) * model.lambda.asDiagonal();
    const Matrix g = ((b.transpose() * b).cwiseProduct(c.transpose() * c)).cwiseProduct(lambda_outer);
    for (Eigen::Index r = 0; r < rank; ++r) {
      const double denom = std::max(g(r, r), epsilon_div);
      Vector col = a.col(r) + (m.col(r) - a * g.col(r)) / denom;
      col = col.cwiseMax(0.0);
      if (col.isZero(0.0)) {
        for (Eigen::Index i = 0; i < col.size(); ++i)
          col(i) = reseed_scale * rng.uniform_open_closed();
        if (events) events->push_back({sweep_no, mode, static_cast<std::size_t>(r)});
      }
      a.col(r) = col;
    }
    if (mode == 3) inner = m.cwiseProduct(a).sum();
  }
  return inner;
}

// Squared relative error from Gram matrices, without forming the residual.
inline double relative_error_sq_from_inner(const CPModel& model, double inner, double xnorm_sq) {
  const Matrix g = (model.u.transpose() * model.u)
                       .cwiseProduct(model.v.transpose() * model.v)
                       .cwiseProduct(model.t.transpose() * model.t);
  const double model_sq = model.lambda.dot(g * model.lambda);
  return (xnorm_sq - 2.0 * inner + model_sq) / xnorm_sq;
}

}  // namespace detail

/// One full HALS sweep (modes 1, 2, 3). Columns that collapse to zero are
/// re-seeded with uniform(0,1] * 1e-3 * mean(x) entries drawn from
/// Rng(reseed_seed).
inline CPModel hals_sweep(const Tensor3& x, const CPModel& model, double epsilon_div = 1e-12,
                          std::uint64_t reseed_seed = 0,
                          std::vector<ReseedEvent>* events = nullptr) {
  detail::check_sweep_inputs(x, model);
  CPModel out = model;
  Rng rng(reseed_seed);
  detail::hals_sweep_inplace(x, out, epsilon_div, 1e-3 * detail::tensor_mean(x), rng, 0, events);
  return out;
}

/// Relative error treated as an exact fit when deciding convergence.
inline constexpr double kExactFit = 1e-14;

/// Fits a non-negative rank-R CP model from a single random start.
///
/// The random start is rescaled along U so its reconstruction has the norm
/// of x, which makes the iteration equivariant under x -> c*x. Sweeps stop
/// once the relative change in relative error drops below cfg.tol or after
/// cfg.max_sweeps, or once the fit is exact to rounding (kExactFit). The
/// returned model is normalized.
inline FitResult fit(const Tensor3& x, const FitConfig& cfg) {
  cfg.validate();
  if (!x.fully_observed())
    throw DataError("fit requires a fully observed tensor; impute missing cells first");
  if (!x.all_finite()) throw DataError("tensor contains non-finite values");
  const double xnorm = frobenius_norm(x);
  if (!(xnorm > 0.0)) throw DataError("cannot fit a tensor with zero norm");

  FitResult result;
  CPModel& model = result.model;
  model = init_random(x.dims(), cfg.rank, cfg.seed);
  const double start_norm = frobenius_norm(reconstruct(model));
  model.u *= xnorm / start_norm;

  FitTrace& trace = result.trace;
  trace.seed = cfg.seed;
  trace.initial_error = relative_error(x, model);
  Rng reseed_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  const double reseed_scale = 1e-3 * detail::tensor_mean(x);

  double previous = trace.initial_error;
  for (std::size_t sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const double inner = detail::hals_sweep_inplace(x, model, cfg.epsilon_div, reseed_scale,
                                                    reseed_rng, sweep, &trace.reseeds);
    // The Gram-based formula cancels catastrophically near an exact fit, so
    // small errors are recomputed from the explicit residual.
    const double err_sq = detail::relative_error_sq_from_inner(model, inner, xnorm * xnorm);
    const double err = err_sq > 1e-6 ? std::sqrt(err_sq) : relative_error(x, model);
    trace.relative_errors.push_back(err);
    trace.sweeps_run = sweep;
    // Below kExactFit the error is rounding noise and no longer descends.
    if (err <= kExactFit || std::abs(previous - err) < cfg.tol * previous) {
      trace.converged = true;
      break;
    }
    previous = err;
  }
  model = normalize_columns(model);
  return result;
}

}  // namespace lifetensor
