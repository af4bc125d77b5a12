#pragma once

// CSV renderings of rank scans, test results and KDE curves.

#include <string>

#include "lifetensor/kde.hpp"
#include "lifetensor/rank_scan.hpp"
#include "lifetensor/stats.hpp"
#include "lifetensor/text_io.hpp"

namespace lifetensor::io {

/// rank,mean_cc,std_cc,n_init; std_cc is empty where it is not reported.
inline std::string format_rank_scan(const RankScan& scan) {
  std::string out = "rank,mean_cc,std_cc,n_init\n";
  for (std::size_t i = 0; i < scan.ranks.size(); ++i) {
    out += std::to_string(scan.ranks[i]) + "," + format_double(scan.mean_cc[i]) + ",";
    if (scan.std_cc[i]) out += format_double(*scan.std_cc[i]);
    out += "," + std::to_string(scan.n_init[i]) + "\n";
  }
  return out;
}

inline std::string test_results_header() { return "test,groups,statistic,df,p_value\n"; }

/// One CSV row; groups render as label:n joined by '|', df values by ';'.
inline std::string format_test_result(const TestResult& r) {
  std::string groups;
  for (std::size_t g = 0; g < r.group_labels.size(); ++g)
    groups += (g ? "|" : "") + r.group_labels[g] + ":" + std::to_string(r.group_sizes[g]);
  std::string df;
  for (std::size_t i = 0; i < r.df.size(); ++i) df += (i ? ";" : "") + format_double(r.df[i]);
  return r.test_name + "," + groups + "," + format_double(r.statistic) + "," + df + "," +
         format_double(r.p_value) + "\n";
}

inline std::string format_kde(const KDECurve& c) {
  std::string out = "# bandwidth=" + format_double(c.bandwidth) + " n=" + std::to_string(c.sample_size) + "\n";
  out += "x,density\n";
  for (std::size_t g = 0; g < c.grid.size(); ++g)
    out += format_double(c.grid[g]) + "," + format_double(c.density[g]) + "\n";
  return out;
}

}  // namespace lifetensor::io
