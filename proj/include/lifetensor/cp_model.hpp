#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lifetensor/tensor.hpp"

namespace lifetensor {

/// Weighted sum of R rank-one tensors: sum_r lambda_r u_r o v_r o t_r.
struct CPModel {
  Vector lambda;
  Matrix u;  // I x R, individuals
  Matrix v;  // J x R, variables
  Matrix t;  // K x R, days

  std::size_t rank() const { return static_cast<std::size_t>(lambda.size()); }
  Dims dims() const {
    return {static_cast<std::size_t>(u.rows()), static_cast<std::size_t>(v.rows()),
            static_cast<std::size_t>(t.rows())};
  }

  const Matrix& factor(int mode) const { return mode == 1 ? u : (mode == 2 ? v : t); }
  Matrix& factor(int mode) { return mode == 1 ? u : (mode == 2 ? v : t); }

  /// Throws UsageError unless all factors share the rank of lambda.
  void validate() const {
    const auto r = lambda.size();
    if (r < 1 || u.cols() != r || v.cols() != r || t.cols() != r)
      throw UsageError("CP model factors and lambda disagree on rank");
    if (u.rows() < 1 || v.rows() < 1 || t.rows() < 1)
      throw UsageError("CP model factors must have at least one row");
  }

  bool nonnegative() const {
    return (lambda.array() >= 0).all() && (u.array() >= 0).all() && (v.array() >= 0).all() &&
           (t.array() >= 0).all();
  }

  friend bool operator==(const CPModel& a, const CPModel& b) {
    auto same = [](const auto& x, const auto& y) {
      return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    return same(a.lambda, b.lambda) && same(a.u, b.u) && same(a.v, b.v) && same(a.t, b.t);
  }
};

/// Dense reconstruction; the result is fully observed.
inline Tensor3 reconstruct(const CPModel& model) {
  model.validate();
  Tensor3 x(model.dims());
  x.mode1_view() = model.u * model.lambda.asDiagonal() * khatri_rao(model.t, model.v).transpose();
  return x;
}

/// ||x - reconstruct(model)||_F / ||x||_F.
inline double relative_error(const Tensor3& x, const CPModel& model) {
  model.validate();
  if (x.dims() != model.dims()) throw UsageError("relative_error: tensor and model shapes differ");
  const double xnorm = frobenius_norm(x);
  if (!(xnorm > 0.0)) throw UsageError("relative_error: input tensor has zero norm");
  const Matrix residual = x.mode1_view() - model.u * model.lambda.asDiagonal() *
                                               khatri_rao(model.t, model.v).transpose();
  return residual.norm() / xnorm;
}

/// Scales every nonzero factor column to unit norm, moves the scale into
/// lambda and sorts components by descending lambda (stable on ties).
inline CPModel normalize_columns(const CPModel& model) {
  model.validate();
  CPModel scaled = model;
  for (Eigen::Index r = 0; r < scaled.lambda.size(); ++r) {
    for (int mode = 1; mode <= 3; ++mode) {
      auto col = scaled.factor(mode).col(r);
      const double n = col.norm();
      if (n > 0.0) {
        col /= n;
        scaled.lambda(r) *= n;
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(scaled.lambda.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return scaled.lambda(a) > scaled.lambda(b);
  });
  CPModel out = scaled;
  for (std::size_t dst = 0; dst < order.size(); ++dst) {
    const auto d = static_cast<Eigen::Index>(dst);
    out.lambda(d) = scaled.lambda(order[dst]);
    out.u.col(d) = scaled.u.col(order[dst]);
    out.v.col(d) = scaled.v.col(order[dst]);
    out.t.col(d) = scaled.t.col(order[dst]);
  }
  return out;
}

}  // namespace lifetensor
