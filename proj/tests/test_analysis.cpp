#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lifetensor/analysis.hpp"
#include "lifetensor/fit_restarts.hpp"
#include "lifetensor/fms.hpp"
#include "oracles.hpp"

using namespace lifetensor;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Membership members(std::size_t component, const std::vector<std::string>& users) {
  Membership m;
  m.component = component;
  for (const auto& u : users) m.individuals.emplace_back(u, 1.0);
  return m;
}

}  // namespace

TEST(TopVariables, AllVariablesSortedDescending) {
  Rng rng(1);
  const CPModel m = oracle::random_model({5, 9, 4}, 2, rng);
  const AxisLabels labels = AxisLabels::generic(m.dims());
  const auto top = top_variables(m, labels, 2, 9);
  ASSERT_EQ(top.size(), 9u);
  std::set<std::string> names;
  for (std::size_t i = 0; i < top.size(); ++i) {
    names.insert(top[i].first);
    if (i) EXPECT_GE(top[i - 1].second, top[i].second);
  }
  EXPECT_EQ(names.size(), 9u);
}

TEST(TopVariables, OneHotColumn) {
  Rng rng(2);
  CPModel m = oracle::random_model({4, 6, 3}, 1, rng);
  m.v.setZero();
  m.v(4, 0) = 1.0;
  const auto top = top_variables(m, AxisLabels::generic(m.dims()), 1, 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].first, "v4");
  EXPECT_EQ(top[0].second, 1.0);
}

TEST(TopVariables, RecoversPlantedBlockAfterFit) {
  Rng rng(3);
  const Dims d{14, 12, 10};
  CPModel truth = oracle::random_model(d, 2, rng);
  truth.v.col(0).setConstant(0.01);
  truth.v(3, 0) = 1.0;
  truth.v(7, 0) = 0.9;
  const Tensor3 x = reconstruct(truth);
  FitConfig cfg;
  cfg.rank = 2;
  cfg.n_restarts = 5;
  cfg.seed = 1;
  const CPModel fitted = fit_restarts(x, cfg, 1).best.model;
  ASSERT_GE(factor_match_score(fitted, truth), 0.99);
  // find the component carrying the block
  std::size_t r = 1;
  if (fitted.v(3, 1) > fitted.v(3, 0)) r = 2;
  const auto top = top_variables(fitted, AxisLabels::generic(d), r, 2);
  EXPECT_EQ(top[0].first, "v03");
  EXPECT_EQ(top[1].first, "v07");
}

TEST(TopVariables, RangeErrors) {
  Rng rng(4);
  const CPModel m = oracle::random_model({3, 4, 5}, 2, rng);
  const AxisLabels l = AxisLabels::generic(m.dims());
  EXPECT_THROW(top_variables(m, l, 0, 1), UsageError);
  EXPECT_THROW(top_variables(m, l, 3, 1), UsageError);
  EXPECT_THROW(top_variables(m, l, 1, 0), UsageError);
  EXPECT_THROW(top_variables(m, l, 1, 5), UsageError);
  AxisLabels bad = l;
  bad.variables.pop_back();
  EXPECT_THROW(top_variables(m, bad, 1, 1), UsageError);
}

TEST(TopIndividuals, FullFractionIsEveryone) {
  Rng rng(5);
  const CPModel m = oracle::random_model({7, 3, 3}, 2, rng);
  const Membership all = top_individuals(m, AxisLabels::generic(m.dims()), 1, 1.0);
  EXPECT_EQ(all.individuals.size(), 7u);
  EXPECT_EQ(all.component, 1u);
}

TEST(TopIndividuals, QuarterOfFortyEight) {
  Rng rng(6);
  const CPModel m = oracle::random_model({48, 5, 6}, 3, rng);
  const AxisLabels l = AxisLabels::generic(m.dims());
  const Membership q = top_individuals(m, l, 3);
  ASSERT_EQ(q.individuals.size(), 12u);
  // every non-member weighs no more than the weakest member
  const double weakest = q.individuals.back().second;
  std::set<std::string> in;
  for (const auto& [u, w] : q.individuals) in.insert(u);
  for (std::size_t i = 0; i < 48; ++i)
    if (!in.contains(l.individuals[i])) EXPECT_LE(m.u(static_cast<Eigen::Index>(i), 2), weakest);
  EXPECT_EQ(top_individuals(m, l, 1, 0.1).individuals.size(), 5u);
  EXPECT_THROW(top_individuals(m, l, 1, 0.0), UsageError);
  EXPECT_THROW(top_individuals(m, l, 1, 1.5), UsageError);
}

TEST(TopIndividuals, LambdaDoesNotChangeMembership) {
  Rng rng(7);
  CPModel m = oracle::random_model({20, 4, 4}, 2, rng);
  const AxisLabels l = AxisLabels::generic(m.dims());
  const Membership a = top_individuals(m, l, 2);
  m.lambda *= 37.0;
  const Membership b = top_individuals(m, l, 2);
  ASSERT_EQ(a.individuals.size(), b.individuals.size());
  for (std::size_t i = 0; i < a.individuals.size(); ++i) EXPECT_EQ(a.individuals[i].first, b.individuals[i].first);
}

TEST(TemporalProfile, OneRowPerDay) {
  Rng rng(8);
  const CPModel m = oracle::random_model({4, 3, 66}, 2, rng);
  const auto p = temporal_profile(m, AxisLabels::generic(m.dims()), 2);
  ASSERT_EQ(p.size(), 66u);
  for (std::size_t k = 0; k < 66; ++k) {
    EXPECT_EQ(p[k].first, static_cast<long>(k));
    EXPECT_EQ(p[k].second, m.t(static_cast<Eigen::Index>(k), 1));
    EXPECT_LE(p[k].second, 1.0);
  }
}

TEST(TemporalProfile, RecoversPlantedRamp) {
  Rng rng(9);
  const Dims d{16, 12, 30};
  CPModel truth = oracle::random_model(d, 2, rng);
  std::vector<double> ramp;
  for (std::size_t k = 0; k < d[2]; ++k) {
    ramp.push_back(0.1 + static_cast<double>(k));
    truth.t(static_cast<Eigen::Index>(k), 0) = ramp.back();
  }
  normalize_columns(truth);
  Tensor3 x = reconstruct(truth);
  for (double& v : x.values()) v *= 1.0 + 0.02 * rng.normal();
  FitConfig cfg;
  cfg.rank = 2;
  cfg.n_restarts = 5;
  cfg.seed = 2;
  const CPModel fitted = fit_restarts(x, cfg, 1).best.model;
  const AxisLabels l = AxisLabels::generic(d);
  double best = -1.0;
  for (std::size_t r = 1; r <= 2; ++r) {
    std::vector<double> prof;
    for (const auto& [day, w] : temporal_profile(fitted, l, r)) prof.push_back(w);
    best = std::max(best, pearson(prof, ramp));
  }
  EXPECT_GE(best, 0.95);
}

TEST(TemporalProfile, LabelMismatch) {
  Rng rng(10);
  const CPModel m = oracle::random_model({4, 3, 5}, 1, rng);
  AxisLabels l = AxisLabels::generic(m.dims());
  l.days.pop_back();
  EXPECT_THROW(temporal_profile(m, l, 1), UsageError);
}

TEST(Metadata, DuplicateRejected) {
  MetadataTable t;
  t.add("a", "gpa", 3.0);
  EXPECT_THROW(t.add("a", "gpa", 3.5), DataError);
  EXPECT_FALSE(t.get("b", "gpa").has_value());
  EXPECT_FALSE(t.get("a", "sleep").has_value());
  EXPECT_EQ(*t.get("a", "gpa"), 3.0);
}

TEST(CompareGroups, IdenticalDistributionsGivePOne) {
  MetadataTable t;
  const std::vector<double> vals{2.0, 3.0, 3.5, 4.0};
  std::vector<std::string> a, b;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    t.add("a" + std::to_string(i), "gpa", vals[i]);
    t.add("b" + std::to_string(i), "gpa", vals[i]);
    a.push_back("a" + std::to_string(i));
    b.push_back("b" + std::to_string(i));
  }
  for (const std::string test : {"welch", "ks", "anova", "kruskal"}) {
    const GroupComparison c = compare_groups({members(1, a), members(2, b)}, t, "gpa", test);
    ASSERT_EQ(c.tests.size(), 1u);
    EXPECT_NEAR(c.tests[0].p_value, 1.0, 1e-12) << test;
    EXPECT_EQ(c.kde.size(), 2u);
  }
}

TEST(CompareGroups, ShiftedGroupDetected) {
  Rng rng(11);
  MetadataTable t;
  std::vector<std::string> a, b;
  for (int i = 0; i < 12; ++i) {
    a.push_back("a" + std::to_string(i));
    b.push_back("b" + std::to_string(i));
    t.add(a.back(), "x", rng.normal());
    t.add(b.back(), "x", 3.0 + rng.normal());
  }
  for (const std::string test : {"welch", "ks", "anova", "kruskal"})
    EXPECT_LT(compare_groups({members(1, a), members(2, b)}, t, "x", test).tests[0].p_value, 0.01) << test;
}

TEST(CompareGroups, MissingValuesDroppedAndCounted) {
  MetadataTable t;
  t.add("a0", "x", 1.0);
  t.add("a1", "x", 2.0);
  t.add("b0", "x", 5.0);
  t.add("b1", "x", 6.0);
  t.add("b2", "x", 7.0);
  t.add("c0", "x", 1.0);
  const GroupComparison c = compare_groups(
      {members(1, {"a0", "a1", "ghost"}), members(2, {"b0", "b1", "b2"}), members(3, {"c0", "nobody"})}, t, "x",
      "welch");
  ASSERT_EQ(c.groups.size(), 2u);
  EXPECT_EQ(c.dropped, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(c.skipped, (std::vector<std::string>{"component_3"}));
  EXPECT_EQ(c.tests.size(), 1u);
  EXPECT_EQ(c.tests[0].group_sizes, (std::vector<std::size_t>{2, 3}));
}

TEST(CompareGroups, PairwiseCount) {
  MetadataTable t;
  std::vector<Membership> ms;
  for (std::size_t g = 1; g <= 4; ++g) {
    std::vector<std::string> us;
    for (int i = 0; i < 3; ++i) {
      us.push_back("g" + std::to_string(g) + "_" + std::to_string(i));
      t.add(us.back(), "x", static_cast<double>(g) + 0.1 * i);
    }
    ms.push_back(members(g, us));
  }
  EXPECT_EQ(compare_groups(ms, t, "x", "ks").tests.size(), 6u);
  EXPECT_EQ(compare_groups(ms, t, "x", "kruskal").tests.size(), 1u);
}

TEST(CompareGroups, AnovaOfTwoGroupsIsPooledTSquared) {
  MetadataTable t;
  const std::vector<double> av{3.1, 2.4, 3.9, 3.3, 2.8}, bv{3.6, 4.1, 3.2, 4.4};
  std::vector<std::string> a, b;
  for (std::size_t i = 0; i < av.size(); ++i) t.add(a.emplace_back("a" + std::to_string(i)), "gpa", av[i]);
  for (std::size_t i = 0; i < bv.size(); ++i) t.add(b.emplace_back("b" + std::to_string(i)), "gpa", bv[i]);
  const TestResult r = compare_groups({members(1, a), members(2, b)}, t, "gpa", "anova").tests[0];
  const auto [tp, df] = oracle::pooled_t(av, bv);
  EXPECT_NEAR(r.statistic, tp * tp, 1e-10);
  EXPECT_NEAR(r.p_value, oracle::t_two_sided_by_quadrature(tp, df), 1e-10);
}

TEST(CompareGroups, Errors) {
  MetadataTable t;
  t.add("a", "x", 1.0);
  t.add("b", "x", 2.0);
  const std::vector<Membership> ms{members(1, {"a", "b"}), members(2, {"a", "b"})};
  EXPECT_THROW(compare_groups(ms, t, "x", "ttest"), UsageError);
  EXPECT_THROW(compare_groups(ms, t, "missing", "welch"), DataError);
  EXPECT_THROW(compare_groups({members(1, {"a", "b"}), members(2, {"a"})}, t, "x", "welch"), DataError);
}
