#pragma once

// Interpretation of a fitted model: which variables and individuals load on
// each component, the component's course over the study days, and whether
// the strongest members of different components differ in their metadata.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lifetensor/cp_model.hpp"
#include "lifetensor/dataset.hpp"
#include "lifetensor/kde.hpp"
#include "lifetensor/stats.hpp"

namespace lifetensor {

struct Membership {
  std::size_t component = 1;  // 1-based
  std::vector<std::pair<std::string, double>> individuals;  // descending weight
  double cutoff_fraction = 0.25;
};

/// Per-user metric values, e.g. gpa or extraversion.
class MetadataTable {
 public:
  /// Throws DataError on a repeated (user, metric) pair.
  void add(const std::string& user, const std::string& metric, double value) {
    if (!values_[metric].emplace(user, value).second)
      throw DataError("metadata: duplicate value for user '" + user + "', metric '" + metric + "'");
  }

  std::optional<double> get(const std::string& user, const std::string& metric) const {
    auto m = values_.find(metric);
    if (m == values_.end()) return std::nullopt;
    auto u = m->second.find(user);
    if (u == m->second.end()) return std::nullopt;
    return u->second;
  }

  bool has_metric(const std::string& metric) const { return values_.contains(metric); }

  std::vector<std::string> metrics() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : values_) out.push_back(name);
    return out;
  }

 private:
  std::map<std::string, std::map<std::string, double>> values_;
};

namespace detail {

inline void check_component(const CPModel& model, std::size_t r) {
  if (r < 1 || r > model.rank())
    throw UsageError("component " + std::to_string(r) + " out of range 1.." +
                     std::to_string(model.rank()));
}

// Indices of a column sorted by descending value, ties in axis order.
inline std::vector<std::size_t> descending_order(const Eigen::Ref<const Vector>& col) {
  std::vector<std::size_t> order(static_cast<std::size_t>(col.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return col(static_cast<Eigen::Index>(a)) > col(static_cast<Eigen::Index>(b));
  });
  return order;
}

}  // namespace detail

/// The k variables with the largest weight in component r (1-based).
inline std::vector<std::pair<std::string, double>> top_variables(const CPModel& model,
                                                                 const AxisLabels& labels,
                                                                 std::size_t r, std::size_t k) {
  model.validate();
  detail::check_component(model, r);
  const auto rows = static_cast<std::size_t>(model.v.rows());
  if (k < 1 || k > rows)
    throw UsageError("k must lie in 1.." + std::to_string(rows) + ", got " + std::to_string(k));
  if (labels.variables.size() != rows) throw UsageError("variable labels do not match the model");
  const Vector col = model.v.col(static_cast<Eigen::Index>(r - 1));
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t j : detail::descending_order(col)) {
    if (out.size() == k) break;
    out.emplace_back(labels.variables[j], col(static_cast<Eigen::Index>(j)));
  }
  return out;
}

/// The ceil(fraction * I) individuals most associated with component r.
inline Membership top_individuals(const CPModel& model, const AxisLabels& labels, std::size_t r,
                                  double fraction = 0.25) {
  model.validate();
  detail::check_component(model, r);
  if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("fraction must lie in (0, 1]");
  const auto rows = static_cast<std::size_t>(model.u.rows());
  if (labels.individuals.size() != rows) throw UsageError("individual labels do not match the model");
  // Guard against fraction * I landing a hair above an integer.
  const auto count = std::min(rows, static_cast<std::size_t>(
                                        std::ceil(fraction * static_cast<double>(rows) - 1e-9)));
  Membership m;
  m.component = r;
  m.cutoff_fraction = fraction;
  const Vector col = model.u.col(static_cast<Eigen::Index>(r - 1));
  for (std::size_t i : detail::descending_order(col)) {
    if (m.individuals.size() == count) break;
    m.individuals.emplace_back(labels.individuals[i], col(static_cast<Eigen::Index>(i)));
  }
  return m;
}

/// Column r of the day factor, paired with day labels.
inline std::vector<std::pair<long, double>> temporal_profile(const CPModel& model,
                                                             const AxisLabels& labels, std::size_t r) {
  model.validate();
  detail::check_component(model, r);
  if (labels.days.size() != static_cast<std::size_t>(model.t.rows()))
    throw UsageError("day labels do not match the model");
  std::vector<std::pair<long, double>> out;
  for (Eigen::Index k = 0; k < model.t.rows(); ++k)
    out.emplace_back(labels.days[static_cast<std::size_t>(k)],
                     model.t(k, static_cast<Eigen::Index>(r - 1)));
  return out;
}

struct GroupComparison {
  std::string metric;
  std::vector<SampleGroup> groups;       // usable groups, in membership order
  std::vector<std::size_t> dropped;      // members lacking the metric, per usable group
  std::vector<std::string> skipped;      // memberships with fewer than 2 values
  std::vector<TestResult> tests;
  std::vector<KDECurve> kde;             // one per usable group
};

/// Builds one sample per membership from a metadata metric and runs
/// `test_name`: "welch" and "ks" compare every pair of groups, "anova" and
/// "kruskal" test all groups at once.
inline GroupComparison compare_groups(const std::vector<Membership>& memberships,
                                      const MetadataTable& metadata, const std::string& metric,
                                      const std::string& test_name) {
  if (test_name != "welch" && test_name != "ks" && test_name != "anova" && test_name != "kruskal")
    throw UsageError("unknown test '" + test_name + "' (expected welch, ks, anova or kruskal)");
  if (!metadata.has_metric(metric)) throw DataError("metadata has no metric '" + metric + "'");

  GroupComparison out;
  out.metric = metric;
  for (const Membership& m : memberships) {
    SampleGroup g;
    g.label = "component_" + std::to_string(m.component);
    std::size_t dropped = 0;
    for (const auto& [user, weight] : m.individuals) {
      if (auto v = metadata.get(user, metric)) g.values.push_back(*v);
      else ++dropped;
    }
    if (g.size() < 2) {
      out.skipped.push_back(g.label);
      continue;
    }
    out.groups.push_back(std::move(g));
    out.dropped.push_back(dropped);
  }
  if (out.groups.size() < 2)
    throw DataError("metric '" + metric + "': fewer than 2 groups with at least 2 values");

  if (test_name == "anova") {
    out.tests.push_back(one_way_anova(out.groups));
  } else if (test_name == "kruskal") {
    out.tests.push_back(kruskal_wallis(out.groups));
  } else {
    for (std::size_t a = 0; a < out.groups.size(); ++a)
      for (std::size_t b = a + 1; b < out.groups.size(); ++b)
        out.tests.push_back(test_name == "welch" ? welch_t_test(out.groups[a], out.groups[b])
                                                 : ks_two_sample(out.groups[a], out.groups[b]));
  }
  for (const SampleGroup& g : out.groups) out.kde.push_back(kde(g));
  return out;
}

}  // namespace lifetensor
