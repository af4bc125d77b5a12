#pragma once

// Two-sample and k-sample hypothesis tests used to compare the metadata of
// component memberships.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lifetensor/error.hpp"
#include "lifetensor/special.hpp"

namespace lifetensor {

struct SampleGroup {
  std::string label;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

struct TestResult {
  std::string test_name;
  double statistic = 0.0;
  std::vector<double> df;  // empty, one value, or (numerator, denominator)
  double p_value = 1.0;
  std::vector<std::string> group_labels;
  std::vector<std::size_t> group_sizes;
  bool degenerate = false;  // both groups constant with equal means (Welch)
};

namespace detail {

inline void check_finite(const SampleGroup& g) {
  for (double v : g.values)
    if (!std::isfinite(v)) throw UsageError("group '" + g.label + "' contains a non-finite value");
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample variance with n - 1 denominator (two-pass).
inline double sample_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline TestResult make_result(std::string name, const std::vector<const SampleGroup*>& groups) {
  TestResult r;
  r.test_name = std::move(name);
  for (const SampleGroup* g : groups) {
    r.group_labels.push_back(g->label);
    r.group_sizes.push_back(g->size());
  }
  return r;
}

// Mid-ranks (1-based) of the pooled sample; also returns sum over tie
// groups of (t^3 - t).
inline std::vector<double> mid_ranks(const std::vector<double>& pooled, double* tie_sum) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(pooled.size());
  double ties = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = rank;
    const double t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  if (tie_sum) *tie_sum = ties;
  return ranks;
}

}  // namespace detail

/// Welch's unequal-variance t test, two-sided.
inline TestResult welch_t_test(const SampleGroup& a, const SampleGroup& b) {
  detail::check_finite(a);
  detail::check_finite(b);
  if (a.size() < 2 || b.size() < 2)
    throw UsageError("welch_t_test: each group needs at least 2 values");
  TestResult r = detail::make_result("welch_t", {&a, &b});
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = detail::mean(a.values);
  const double mb = detail::mean(b.values);
  const double qa = detail::sample_variance(a.values) / na;
  const double qb = detail::sample_variance(b.values) / nb;
  const double se2 = qa + qb;
  if (se2 == 0.0) {
    if (ma != mb)
      throw NumericalError("welch_t_test: both groups are constant with different means");
    r.statistic = 0.0;
    r.df = {na + nb - 2.0};
    r.p_value = 1.0;
    r.degenerate = true;
    return r;
  }
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  r.statistic = t;
  r.df = {df};
  r.p_value = special::student_t_two_sided(t, df);
  return r;
}

/// One-way analysis of variance over k >= 2 groups.
inline TestResult one_way_anova(const std::vector<SampleGroup>& groups) {
  if (groups.size() < 2) throw UsageError("one_way_anova: need at least 2 groups");
  std::vector<const SampleGroup*> ptrs;
  double total = 0.0;
  std::size_t n_total = 0;
  for (const SampleGroup& g : groups) {
    detail::check_finite(g);
    if (g.size() < 2) throw UsageError("one_way_anova: group '" + g.label + "' has fewer than 2 values");
    ptrs.push_back(&g);
    total += std::accumulate(g.values.begin(), g.values.end(), 0.0);
    n_total += g.size();
  }
  const double grand = total / static_cast<double>(n_total);
  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const SampleGroup& g : groups) {
    const double m = detail::mean(g.values);
    ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g.values) ss_within += (v - m) * (v - m);
  }
  if (!(ss_within > 0.0)) throw NumericalError("one_way_anova: zero within-group variance");
  const double df1 = static_cast<double>(groups.size() - 1);
  const double df2 = static_cast<double>(n_total - groups.size());
  TestResult r = detail::make_result("anova", ptrs);
  r.statistic = (ss_between / df1) / (ss_within / df2);
  r.df = {df1, df2};
  r.p_value = special::f_survival(r.statistic, df1, df2);
  return r;
}

/// Kruskal-Wallis H test on mid-ranks with tie correction.
inline TestResult kruskal_wallis(const std::vector<SampleGroup>& groups) {
  if (groups.size() < 2) throw UsageError("kruskal_wallis: need at least 2 groups");
  std::vector<const SampleGroup*> ptrs;
  std::vector<double> pooled;
  for (const SampleGroup& g : groups) {
    detail::check_finite(g);
    if (g.size() < 1) throw UsageError("kruskal_wallis: group '" + g.label + "' is empty");
    ptrs.push_back(&g);
    pooled.insert(pooled.end(), g.values.begin(), g.values.end());
  }
  const double n = static_cast<double>(pooled.size());
  if (pooled.size() < 3) throw UsageError("kruskal_wallis: need at least 3 values in total");
  double tie_sum = 0.0;
  const std::vector<double> ranks = detail::mid_ranks(pooled, &tie_sum);
  const double correction = 1.0 - tie_sum / (n * n * n - n);
  if (!(correction > 0.0)) throw NumericalError("kruskal_wallis: all values are identical");
  double term = 0.0;
  std::size_t offset = 0;
  for (const SampleGroup& g : groups) {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
    offset += g.size();
    term += rank_sum * rank_sum / static_cast<double>(g.size());
  }
  const double h = (12.0 / (n * (n + 1.0)) * term - 3.0 * (n + 1.0)) / correction;
  TestResult r = detail::make_result("kruskal_wallis", ptrs);
  r.statistic = std::max(0.0, h);
  r.df = {static_cast<double>(groups.size() - 1)};
  r.p_value = special::chi_square_survival(r.statistic, r.df[0]);
  return r;
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// Q(D sqrt(n m / (n + m))); approximate for small samples.
inline TestResult ks_two_sample(const SampleGroup& a, const SampleGroup& b) {
  detail::check_finite(a);
  detail::check_finite(b);
  if (a.size() < 1 || b.size() < 1) throw UsageError("ks_two_sample: groups must be non-empty");
  std::vector<double> x = a.values;
  std::vector<double> y = b.values;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  TestResult r = detail::make_result("ks", {&a, &b});
  r.statistic = d;
  r.p_value = special::kolmogorov_survival(d * std::sqrt(n * m / (n + m)));
  return r;
}

/// One-sample Kolmogorov-Smirnov test against Uniform(0, 1), asymptotic p.
inline TestResult ks_uniform(const SampleGroup& a) {
  detail::check_finite(a);
  if (a.size() < 1) throw UsageError("ks_uniform: sample must be non-empty");
  std::vector<double> x = a.values;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  TestResult r = detail::make_result("ks_uniform", {&a});
  r.statistic = d;
  r.p_value = special::kolmogorov_survival(d * std::sqrt(n));
  return r;
}

}  // namespace lifetensor
