#pragma once

// Core consistency diagnostic (CORCONDIA).
//
// The factors are rescaled as A_n diag(lambda^(1/3)) so that an exact CP
// model has the R x R x R superdiagonal of ones as its least-squares Tucker
// core. The core is obtained with mode-wise pseudo-inverses,
//   G = x x1 U+ x2 V+ x3 T+,
// and scored as 100 * (1 - sum (g - delta)^2 / R).

#include <cmath>
#include <string>

#include "lifetensor/cp_model.hpp"

namespace lifetensor {

/// Moore-Penrose pseudo-inverse via SVD. Singular values below
/// rel_cutoff * sigma_max count as zero; `numerical_rank` receives the rest.
inline Matrix pseudo_inverse(const Matrix& a, double rel_cutoff, Eigen::Index* numerical_rank) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rel_cutoff * s(0) : 0.0;
  Vector inv = Vector::Zero(s.size());
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) {
      inv(i) = 1.0 / s(i);
      ++kept;
    }
  }
  if (numerical_rank) *numerical_rank = kept;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Least-squares Tucker core of x for the model's (lambda-rescaled) factors.
inline Tensor3 corcondia_core(const Tensor3& x, const CPModel& model) {
  model.validate();
  if (x.dims() != model.dims()) throw UsageError("corcondia: tensor and model shapes differ");
  const Eigen::Index rank = model.lambda.size();
  if ((model.lambda.array() < 0).any())
    throw UsageError("corcondia: lambda must be non-negative");
  const Vector scale = model.lambda.unaryExpr([](double l) { return std::cbrt(l); });
  Tensor3 core = x;
  for (int mode = 1; mode <= 3; ++mode) {
    const Matrix scaled = model.factor(mode) * scale.asDiagonal();
    Eigen::Index nrank = 0;
    const Matrix pinv = pseudo_inverse(scaled, 1e-12, &nrank);
    if (nrank < rank)
      throw NumericalError("corcondia: rescaled factor for mode " + std::to_string(mode) +
                           " has numerical rank " + std::to_string(nrank) + " < R = " +
                           std::to_string(rank));
    core = mode_product(core, pinv, mode);
  }
  return core;
}

/// Core consistency in percent; 100 means the core is exactly superdiagonal.
inline double corcondia(const Tensor3& x, const CPModel& model) {
  const Tensor3 core = corcondia_core(x, model);
  const std::size_t r = model.rank();
  double ss = 0.0;
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t i = 0; i < r; ++i) {
        const double target = (i == j && j == k) ? 1.0 : 0.0;
        const double d = core(i, j, k) - target;
        ss += d * d;
      }
  return 100.0 * (1.0 - ss / static_cast<double>(r));
}

}  // namespace lifetensor
