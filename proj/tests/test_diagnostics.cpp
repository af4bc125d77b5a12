#include <gtest/gtest.h>

#include <cmath>

#include "lifetensor/corcondia.hpp"
#include "lifetensor/fms.hpp"
#include "lifetensor/hals.hpp"
#include "lifetensor/rank_scan.hpp"
#include "lifetensor/synthetic.hpp"
#include "oracles.hpp"

using namespace lifetensor;

namespace {

SynthResult planted(const Dims& d, std::size_t rank, std::uint64_t seed) {
  SynthSpec spec;
  spec.dims = d;
  spec.rank = rank;
  spec.seed = seed;
  return gen_synthetic(spec);
}

RankScan scan_of(std::vector<double> cc) {
  RankScan s;
  for (std::size_t i = 0; i < cc.size(); ++i) s.ranks.push_back(i + 1);
  s.mean_cc = std::move(cc);
  return s;
}

CPModel permuted_rescaled(const CPModel& m) {
  CPModel out = m;
  const Eigen::Index r = m.lambda.size();
  for (Eigen::Index c = 0; c < r; ++c) {
    const Eigen::Index src = r - 1 - c;
    out.lambda(c) = 3.0 * m.lambda(src);
    out.u.col(c) = 2.0 * m.u.col(src);
    out.v.col(c) = 0.5 * m.v.col(src);
    out.t.col(c) = 7.0 * m.t.col(src);
  }
  return out;
}

}  // namespace

TEST(Corcondia, GeneratingModelScores100) {
  for (std::size_t rank : {1u, 2u, 3u, 4u}) {
    const SynthResult s = planted({6, 7, 8}, rank, 10 + rank);
    EXPECT_NEAR(corcondia(s.dataset.tensor, s.truth), 100.0, 1e-6);
  }
}

TEST(Corcondia, OverfactoredRankOneFallsBelow90) {
  const SynthResult s = planted({8, 9, 10}, 1, 3);
  FitConfig cfg;
  cfg.rank = 2;
  cfg.seed = 4;
  const FitResult f = fit(s.dataset.tensor, cfg);
  EXPECT_LT(corcondia(s.dataset.tensor, f.model), 90.0);
}

TEST(Corcondia, MatchesDenseLeastSquaresOracle) {
  Rng rng(27);
  const Tensor3 x = oracle::random_tensor({4, 4, 4}, rng);
  const CPModel m = normalize_columns(oracle::random_model({4, 4, 4}, 2, rng));
  EXPECT_NEAR(corcondia(x, m), oracle::dense_corcondia(x, m), 1e-8);
}

TEST(Corcondia, MatchesDenseOracleOnFittedSmallShapes) {
  Rng rng(28);
  for (int trial = 0; trial < 30; ++trial) {
    const Dims d = {2 + rng.below(4), 2 + rng.below(4), 2 + rng.below(4)};
    const std::size_t r = 1 + rng.below(std::min({d[0], d[1], d[2]}));
    const Tensor3 x = oracle::random_tensor(d, rng);
    FitConfig cfg;
    cfg.rank = r;
    cfg.seed = rng.next_u64();
    const CPModel m = fit(x, cfg).model;
    double cc = 0.0;
    try {
      cc = corcondia(x, m);
    } catch (const NumericalError&) {
      continue;  // degenerate fit, nothing to compare
    }
    EXPECT_NEAR(cc, oracle::dense_corcondia(x, m, false), 1e-8) << "trial " << trial;
  }
}

TEST(Corcondia, NeverAbove100) {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor3 x = oracle::random_tensor({5, 5, 5}, rng);
    const CPModel m = normalize_columns(oracle::random_model({5, 5, 5}, 3, rng));
    EXPECT_LE(corcondia(x, m), 100.0 + 1e-9);
  }
}

TEST(Corcondia, RankDeficientFactorNamesMode) {
  Rng rng(30);
  CPModel m = oracle::random_model({4, 4, 4}, 2, rng);
  m.v.col(1) = m.v.col(0);
  const Tensor3 x = oracle::random_tensor({4, 4, 4}, rng);
  try {
    corcondia(x, m);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("mode 2"), std::string::npos) << e.what();
  }
}

TEST(Corcondia, RankAboveDimensionIsRankDeficient) {
  Rng rng(31);
  const CPModel m = oracle::random_model({2, 5, 5}, 3, rng);
  EXPECT_THROW(corcondia(oracle::random_tensor({2, 5, 5}, rng), m), NumericalError);
}

TEST(RankScan, ExactRankThreePlant) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SynthResult s = planted({12, 14, 10}, 3, seed);
    RankScanOptions opt;
    opt.n_init = 5;
    opt.seed = 1;
    const RankScan scan = rank_scan(s.dataset.tensor, {1, 2, 3, 4, 5}, opt);
    ASSERT_EQ(scan.mean_cc.size(), 5u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_GE(scan.mean_cc[i], 99.0) << "seed " << seed << " rank " << i + 1;
    EXPECT_LT(scan.mean_cc[3], scan.mean_cc[2]) << "seed " << seed;
    for (double c : scan.mean_cc) {
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 100.0);
    }
  }
}

TEST(RankScan, ClampsNegativeSamples) {
  SynthSpec spec;
  spec.dims = {8, 9, 7};
  spec.rank = 2;
  spec.seed = 4;
  spec.noise_snr_db = 10.0;
  const SynthResult s = gen_synthetic(spec);
  RankScanOptions opt;
  opt.n_init = 4;
  const RankScan scan = rank_scan(s.dataset.tensor, {3, 4, 5}, opt);
  std::size_t negatives = 0;
  for (std::size_t ri = 0; ri < scan.ranks.size(); ++ri) {
    if (scan.raw_cc[ri].empty()) {
      EXPECT_EQ(scan.mean_cc[ri], 0.0);
      EXPECT_FALSE(scan.std_cc[ri].has_value());
      continue;
    }
    double mean = 0.0;
    bool all_negative = true;
    for (double c : scan.raw_cc[ri]) {
      mean += std::max(0.0, c);
      all_negative = all_negative && c < 0.0;
      negatives += (c < 0.0);
    }
    mean /= static_cast<double>(scan.raw_cc[ri].size());
    EXPECT_NEAR(scan.mean_cc[ri], mean, 1e-12);
    EXPECT_EQ(scan.std_cc[ri].has_value(), !all_negative);
  }
  EXPECT_GT(negatives, 0u) << "plant produced no negative samples to clamp";
}

TEST(RankScan, SingleInitHasZeroStd) {
  const SynthResult s = planted({6, 6, 6}, 2, 2);
  RankScanOptions opt;
  opt.n_init = 1;
  const RankScan scan = rank_scan(s.dataset.tensor, {1, 2, 3}, opt);
  for (std::size_t i = 0; i < scan.ranks.size(); ++i)
    if (scan.std_cc[i]) EXPECT_EQ(*scan.std_cc[i], 0.0);
  EXPECT_TRUE(scan.std_cc[0].has_value());
}

TEST(RankScan, DeterministicAndThreadIndependent) {
  const SynthResult s = planted({7, 6, 5}, 2, 6);
  RankScanOptions opt;
  opt.n_init = 3;
  opt.seed = 11;
  const RankScan a = rank_scan(s.dataset.tensor, {1, 2, 3}, opt);
  opt.threads = 4;
  const RankScan b = rank_scan(s.dataset.tensor, {1, 2, 3}, opt);
  EXPECT_EQ(a.mean_cc, b.mean_cc);
  EXPECT_EQ(a.raw_cc, b.raw_cc);
  EXPECT_EQ(a.std_cc, b.std_cc);
}

TEST(RankScan, InvalidRanksRejected) {
  const Tensor3 x({3, 3, 3}, 1.0);
  EXPECT_THROW(rank_scan(x, {}, {}), UsageError);
  EXPECT_THROW(rank_scan(x, {2, 1}, {}), UsageError);
  EXPECT_THROW(rank_scan(x, {0, 1}, {}), UsageError);
}

TEST(RankScan, FailedDiagnosticExcludedWithWarning) {
  // Rank 3 on a 2-row mode cannot have full column rank.
  Rng rng(3);
  const Tensor3 x = oracle::random_tensor({2, 5, 5}, rng);
  RankScanOptions opt;
  opt.n_init = 2;
  const RankScan scan = rank_scan(x, {1, 3}, opt);
  EXPECT_EQ(scan.n_init[0], 2u);
  EXPECT_EQ(scan.n_init[1], 0u);
  EXPECT_FALSE(scan.warnings.empty());
}

TEST(SelectRank, WorkedExample) { EXPECT_EQ(select_rank(scan_of({100, 100, 99, 40, 10})), 3u); }

TEST(SelectRank, LinearCurvePicksSmallestInterior) {
  EXPECT_EQ(select_rank(scan_of({90, 80, 70, 60, 50})), 2u);
}

TEST(SelectRank, InvariantToConstantShift) {
  const std::vector<double> cc = {100, 97, 95, 30, 20, 18};
  std::vector<double> shifted = cc;
  for (double& c : shifted) c += 13.25;
  EXPECT_EQ(select_rank(scan_of(cc)), select_rank(scan_of(shifted)));
}

TEST(SelectRank, TooFewOrGappedRanksRejected) {
  EXPECT_THROW(select_rank(scan_of({100, 50})), UsageError);
  RankScan gapped = scan_of({100, 90, 10});
  gapped.ranks = {1, 2, 4};
  EXPECT_THROW(select_rank(gapped), UsageError);
}

TEST(FactorMatchScore, SelfIsOne) {
  Rng rng(40);
  const CPModel m = oracle::random_model({4, 5, 6}, 3, rng);
  EXPECT_NEAR(factor_match_score(m, m), 1.0, 1e-12);
}

TEST(FactorMatchScore, PermutationAndScaleInvariant) {
  Rng rng(41);
  const CPModel m = oracle::random_model({4, 5, 6}, 4, rng);
  EXPECT_NEAR(factor_match_score(m, permuted_rescaled(m)), 1.0, 1e-12);
}

TEST(FactorMatchScore, OrthogonalFactorsScoreZero) {
  CPModel a, b;
  a.lambda = b.lambda = Vector::Ones(2);
  const Matrix e = Matrix::Identity(4, 4);
  a.u = a.v = a.t = e.leftCols(2);
  b.u = b.v = b.t = e.rightCols(2);
  EXPECT_NEAR(factor_match_score(a, b), 0.0, 1e-12);
}

TEST(FactorMatchScore, Symmetric) {
  Rng rng(42);
  const CPModel a = oracle::random_model({3, 4, 5}, 3, rng);
  const CPModel b = oracle::random_model({3, 4, 5}, 3, rng);
  EXPECT_DOUBLE_EQ(factor_match_score(a, b), factor_match_score(b, a));
  const double s = factor_match_score(a, b);
  EXPECT_GE(s, 0.0);
  EXPECT_LE(s, 1.0);
}

TEST(FactorMatchScore, MismatchRejected) {
  Rng rng(43);
  EXPECT_THROW(factor_match_score(oracle::random_model({3, 4, 5}, 2, rng), oracle::random_model({3, 4, 5}, 3, rng)),
               UsageError);
  EXPECT_THROW(factor_match_score(oracle::random_model({3, 4, 5}, 2, rng), oracle::random_model({3, 4, 6}, 2, rng)),
               UsageError);
  const CPModel big = oracle::random_model({3, 3, 3}, 9, rng);
  EXPECT_THROW(factor_match_score(big, big), UsageError);
}

TEST(GenSynthetic, StudyShapedMaskCount) {
  SynthSpec spec;
  spec.dims = {48, 85, 66};
  spec.missing_frac = 0.05;
  spec.seed = 3;
  const SynthResult s = gen_synthetic(spec);
  const std::size_t expected = static_cast<std::size_t>(0.05 * 48 * 85 * 66);  // 13464
  EXPECT_EQ(expected, 13464u);
  EXPECT_EQ(s.masked_cells, expected);
  EXPECT_EQ(s.dataset.tensor.missing_count(), expected);
}

TEST(GenSynthetic, NoiselessIsExact) {
  const SynthResult s = planted({5, 6, 7}, 3, 1);
  EXPECT_LE(relative_error(s.dataset.tensor, s.truth), 1e-15);  // rounding only; FMA builds differ from 0
  EXPECT_LE(oracle::naive_relative_error(s.dataset.tensor, s.truth), 1e-15);
  EXPECT_FALSE(s.realized_snr_db.has_value());
  EXPECT_TRUE(s.truth.nonnegative());
}

TEST(GenSynthetic, TruthIsNormalizedWithLambdaRange) {
  const SynthResult s = planted({5, 6, 7}, 3, 2);
  for (Eigen::Index r = 0; r < 3; ++r) {
    EXPECT_GT(s.truth.lambda(r), 1.0);
    EXPECT_LE(s.truth.lambda(r), 10.0);
    for (int mode = 1; mode <= 3; ++mode) EXPECT_NEAR(s.truth.factor(mode).col(r).norm(), 1.0, 1e-12);
    if (r > 0) EXPECT_GE(s.truth.lambda(r - 1), s.truth.lambda(r));
  }
}

TEST(GenSynthetic, RealizedSnrNearRequested) {
  SynthSpec spec;
  spec.dims = {10, 12, 8};
  spec.noise_snr_db = 20.0;
  spec.seed = 5;
  const SynthResult s = gen_synthetic(spec);
  ASSERT_TRUE(s.realized_snr_db.has_value());
  EXPECT_NEAR(*s.realized_snr_db, 20.0, 0.5);
  // Recompute from the arrays: clipping only shrinks the noise.
  const Tensor3 signal = reconstruct(s.truth);
  double sig = 0.0, noise = 0.0;
  for (std::size_t n = 0; n < signal.size(); ++n) {
    sig += signal.values()[n] * signal.values()[n];
    const double d = s.dataset.tensor.values()[n] - signal.values()[n];
    noise += d * d;
  }
  EXPECT_NEAR(10.0 * std::log10(sig / noise), 20.0, 0.5);
  for (double v : s.dataset.tensor.values()) EXPECT_GE(v, 0.0);
}

TEST(GenSynthetic, FactorSparsityZeroesEntries) {
  SynthSpec spec;
  spec.dims = {20, 20, 20};
  spec.factor_sparsity = 0.5;
  spec.seed = 6;
  const SynthResult s = gen_synthetic(spec);
  for (int mode = 1; mode <= 3; ++mode)
    for (Eigen::Index r = 0; r < 3; ++r) {
      const auto col = s.truth.factor(mode).col(r);
      EXPECT_EQ((col.array() == 0.0).count(), 10);
    }
}

TEST(GenSynthetic, BitwiseDeterministic) {
  SynthSpec spec;
  spec.dims = {6, 7, 8};
  spec.noise_snr_db = 10.0;
  spec.missing_frac = 0.1;
  spec.factor_sparsity = 0.2;
  spec.seed = 77;
  const SynthResult a = gen_synthetic(spec), b = gen_synthetic(spec);
  EXPECT_EQ(a.dataset.tensor.mask().size(), b.dataset.tensor.mask().size());
  EXPECT_TRUE(std::equal(a.dataset.tensor.mask().begin(), a.dataset.tensor.mask().end(),
                         b.dataset.tensor.mask().begin()));
  for (std::size_t n = 0; n < a.dataset.tensor.size(); ++n) {
    const double x = a.dataset.tensor.values()[n], y = b.dataset.tensor.values()[n];
    EXPECT_TRUE((std::isnan(x) && std::isnan(y)) || x == y);
  }
  EXPECT_EQ(a.truth, b.truth);
}

TEST(GenSynthetic, ValidationAndWarnings) {
  SynthSpec spec;
  spec.missing_frac = 1.0;
  EXPECT_THROW(gen_synthetic(spec), UsageError);
  spec = SynthSpec{};
  spec.dims = {2, 10, 10};
  spec.rank = 3;
  EXPECT_EQ(spec.warnings().size(), 1u);
}
