#pragma once

// Dense 3-way tensor storage and the multilinear kernels shared by the
// decomposition, diagnostics and featurization code.
//
// Index convention (Kolda-Bader): entry (i, j, k) lives at linear offset
// i + I*j + I*J*k. Mode-n unfoldings place the remaining modes on the column
// axis with the earlier mode varying fastest, so that
//   X(1) = U diag(lambda) (T kr V)^T
// holds for a CP model with the Khatri-Rao product defined below.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lifetensor/error.hpp"

namespace lifetensor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using Dims = std::array<std::size_t, 3>;

inline std::size_t element_count(const Dims& d) { return d[0] * d[1] * d[2]; }

/// Dense I x J x K array of doubles with an observation mask.
class Tensor3 {
 public:
  Tensor3() = default;

  explicit Tensor3(Dims dims, double fill = 0.0)
      : dims_(dims), values_(element_count(dims), fill), mask_(element_count(dims), 1) {
    detail::require(dims[0] > 0 && dims[1] > 0 && dims[2] > 0,
                    "tensor dimensions must be positive");
  }

  Tensor3(Dims dims, std::vector<double> values) : Tensor3(dims) {
    detail::require(values.size() == element_count(dims),
                    "tensor value count does not match dimensions");
    values_ = std::move(values);
  }

  const Dims& dims() const { return dims_; }
  std::size_t dim(std::size_t mode) const { return dims_[mode]; }
  std::size_t size() const { return values_.size(); }

  std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const {
    return i + dims_[0] * (j + dims_[1] * k);
  }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return values_[offset(i, j, k)];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[offset(i, j, k)];
  }

  bool observed(std::size_t i, std::size_t j, std::size_t k) const {
    return mask_[offset(i, j, k)] != 0;
  }
  void set_observed(std::size_t i, std::size_t j, std::size_t k, bool obs) {
    mask_[offset(i, j, k)] = obs ? 1 : 0;
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<unsigned char> mask() { return mask_; }
  std::span<const unsigned char> mask() const { return mask_; }

  std::size_t missing_count() const {
    std::size_t n = 0;
    for (unsigned char m : mask_) n += (m == 0);
    return n;
  }
  bool fully_observed() const { return missing_count() == 0; }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  /// Mode-1 unfolding as a zero-copy I x (J*K) view.
  Eigen::Map<const Matrix> mode1_view() const {
    return {values_.data(), static_cast<Eigen::Index>(dims_[0]),
            static_cast<Eigen::Index>(dims_[1] * dims_[2])};
  }
  Eigen::Map<Matrix> mode1_view() {
    return {values_.data(), static_cast<Eigen::Index>(dims_[0]),
            static_cast<Eigen::Index>(dims_[1] * dims_[2])};
  }

  /// (I*J) x K view; its transpose is the mode-3 unfolding.
  Eigen::Map<const Matrix> mode3_transposed_view() const {
    return {values_.data(), static_cast<Eigen::Index>(dims_[0] * dims_[1]),
            static_cast<Eigen::Index>(dims_[2])};
  }

  /// Frontal slice k as an I x J view.
  Eigen::Map<const Matrix> frontal_slice(std::size_t k) const {
    return {values_.data() + dims_[0] * dims_[1] * k, static_cast<Eigen::Index>(dims_[0]),
            static_cast<Eigen::Index>(dims_[1])};
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  Dims dims_{0, 0, 0};
  std::vector<double> values_;
  std::vector<unsigned char> mask_;
};

namespace detail {

inline void check_mode(int mode) {
  if (mode < 1 || mode > 3)
    throw UsageError("invalid mode " + std::to_string(mode) + ": expected 1, 2 or 3");
}

// Row index and column index of entry (i, j, k) in the mode-n unfolding.
inline std::pair<std::size_t, std::size_t> unfold_position(const Dims& d, int mode, std::size_t i,
                                                           std::size_t j, std::size_t k) {
  switch (mode) {
    case 1: return {i, j + d[1] * k};
    case 2: return {j, i + d[0] * k};
    default: return {k, i + d[0] * j};
  }
}

}  // namespace detail

/// Mode-n matricization (mode in {1, 2, 3}).
inline Matrix unfold(const Tensor3& x, int mode) {
  detail::check_mode(mode);
  const Dims& d = x.dims();
  if (mode == 1) return x.mode1_view();
  if (mode == 3) return x.mode3_transposed_view().transpose();
  Matrix out(static_cast<Eigen::Index>(d[1]), static_cast<Eigen::Index>(d[0] * d[2]));
  for (std::size_t k = 0; k < d[2]; ++k)
    out.middleCols(static_cast<Eigen::Index>(d[0] * k), static_cast<Eigen::Index>(d[0])) =
        x.frontal_slice(k).transpose();
  return out;
}

/// Inverse of unfold for a tensor of the given dimensions. Mask is all-true.
inline Tensor3 refold(const Matrix& m, int mode, const Dims& dims) {
  detail::check_mode(mode);
  const auto rows = dims[static_cast<std::size_t>(mode - 1)];
  if (static_cast<std::size_t>(m.rows()) != rows ||
      static_cast<std::size_t>(m.rows() * m.cols()) != element_count(dims))
    throw UsageError("refold: matrix shape does not match tensor dimensions");
  Tensor3 x(dims);
  for (std::size_t k = 0; k < dims[2]; ++k)
    for (std::size_t j = 0; j < dims[1]; ++j)
      for (std::size_t i = 0; i < dims[0]; ++i) {
        auto [r, c] = detail::unfold_position(dims, mode, i, j, k);
        x(i, j, k) = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
  return x;
}

/// Column-wise Kronecker product: row i*n + j of column r is a(i,r) * b(j,r).
inline Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw UsageError("khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()) + ")");
  const Eigen::Index n = b.rows();
  Matrix out(a.rows() * n, a.cols());
  for (Eigen::Index r = 0; r < a.cols(); ++r)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.col(r).segment(i * n, n) = a(i, r) * b.col(r);
  return out;
}

/// Matricized tensor times Khatri-Rao product for one mode.
///
/// `factors` holds the U, V, T factor matrices; the entry for the target mode
/// is ignored. Mode 1 returns X(1) (T kr V), mode 2 returns X(2) (T kr U) and
/// mode 3 returns X(3) (V kr U).
inline Matrix mttkrp(const Tensor3& x, const std::array<const Matrix*, 3>& factors, int mode) {
  detail::check_mode(mode);
  const Dims& d = x.dims();
  Eigen::Index rank = -1;
  for (int m = 1; m <= 3; ++m) {
    if (m == mode) continue;
    const Matrix* f = factors[static_cast<std::size_t>(m - 1)];
    if (f == nullptr) throw UsageError("mttkrp: missing factor for mode " + std::to_string(m));
    if (static_cast<std::size_t>(f->rows()) != d[static_cast<std::size_t>(m - 1)])
      throw UsageError("mttkrp: factor for mode " + std::to_string(m) + " has " +
                       std::to_string(f->rows()) + " rows, tensor dimension is " +
                       std::to_string(d[static_cast<std::size_t>(m - 1)]));
    if (rank >= 0 && f->cols() != rank)
      throw UsageError("mttkrp: factor column counts differ");
    rank = f->cols();
  }
  switch (mode) {
    case 1: return x.mode1_view() * khatri_rao(*factors[2], *factors[1]);
    case 3: return x.mode3_transposed_view().transpose() * khatri_rao(*factors[1], *factors[0]);
    default: {
      // X(2) (T kr U) = sum_k X_k^T U diag(T(k, :))
      const Matrix& u = *factors[0];
      const Matrix& t = *factors[2];
      Matrix out = Matrix::Zero(static_cast<Eigen::Index>(d[1]), rank);
      for (std::size_t k = 0; k < d[2]; ++k)
        out.noalias() += x.frontal_slice(k).transpose() *
                         (u * t.row(static_cast<Eigen::Index>(k)).asDiagonal());
      return out;
    }
  }
}

inline Matrix mttkrp(const Tensor3& x, const Matrix& u, const Matrix& v, const Matrix& t,
                     int mode) {
  return mttkrp(x, {&u, &v, &t}, mode);
}

/// Mode-n product x ×_n m, where m has dims[n] columns.
inline Tensor3 mode_product(const Tensor3& x, const Matrix& m, int mode) {
  detail::check_mode(mode);
  const auto n = static_cast<std::size_t>(mode - 1);
  if (static_cast<std::size_t>(m.cols()) != x.dim(n))
    throw UsageError("mode_product: matrix columns do not match tensor mode size");
  Dims out_dims = x.dims();
  out_dims[n] = static_cast<std::size_t>(m.rows());
  return refold(m * unfold(x, mode), mode, out_dims);
}

/// Square root of the sum of squared entries; the mask is ignored.
inline double frobenius_norm(const Tensor3& x) {
  double sum = 0.0;
  for (double v : x.values()) sum += v * v;
  return std::sqrt(sum);
}

}  // namespace lifetensor
