#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lifetensor/cp_model.hpp"

namespace lifetensor {

/// Factor match score: the best component pairing's mean product of absolute
/// cosines across the three modes. lambda is ignored. Permutations are
/// enumerated exhaustively, so R is limited to 8.
inline double factor_match_score(const CPModel& a, const CPModel& b) {
  a.validate();
  b.validate();
  if (a.rank() != b.rank()) throw UsageError("factor_match_score: ranks differ");
  if (a.dims() != b.dims()) throw UsageError("factor_match_score: dimensions differ");
  const std::size_t rank = a.rank();
  if (rank > 8) throw UsageError("factor_match_score: rank above 8 is not supported");

  const auto r = static_cast<Eigen::Index>(rank);
  Matrix sim = Matrix::Ones(r, r);
  for (int mode = 1; mode <= 3; ++mode) {
    const Matrix& fa = a.factor(mode);
    const Matrix& fb = b.factor(mode);
    for (Eigen::Index p = 0; p < r; ++p)
      for (Eigen::Index q = 0; q < r; ++q) {
        const double na = fa.col(p).norm();
        const double nb = fb.col(q).norm();
        const double cosine = (na > 0 && nb > 0) ? std::abs(fa.col(p).dot(fb.col(q))) / (na * nb) : 0.0;
        sim(p, q) *= cosine;
      }
  }

  std::vector<Eigen::Index> perm(rank);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  double best = 0.0;
  do {
    double total = 0.0;
    for (Eigen::Index p = 0; p < r; ++p) total += sim(p, perm[static_cast<std::size_t>(p)]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::min(1.0, best / static_cast<double>(rank));
}

}  // namespace lifetensor
