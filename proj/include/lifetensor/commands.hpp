#pragma once

// Pipeline commands behind the `lifetensor` executable. Each command reads
// its inputs, validates every option before doing work, writes its outputs
// atomically (files appear complete or not at all) and records a manifest
// next to them. Messages for the user go to `out`, warnings to `err`.

#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "lifetensor/analysis.hpp"
#include "lifetensor/featurize.hpp"
#include "lifetensor/featurize_io.hpp"
#include "lifetensor/fit_restarts.hpp"
#include "lifetensor/fms.hpp"
#include "lifetensor/model_io.hpp"
#include "lifetensor/rank_scan.hpp"
#include "lifetensor/report_io.hpp"
#include "lifetensor/synthetic.hpp"
#include "lifetensor/tensor_io.hpp"

namespace lifetensor::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Files written by a command; removed again unless commit() is reached.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const fs::path& p : paths_) fs::remove_all(p, ec);
  }

  void write(const fs::path& path, const std::string& content) {
    io::write_file_atomic(path, content);
    paths_.push_back(path);
  }
  void track(const fs::path& path) { paths_.push_back(path); }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> paths_;
  bool committed_ = false;
};

/// Line-oriented manifest: `key value` pairs in insertion order.
class Manifest {
 public:
  explicit Manifest(const std::string& command) { add("command", command); }
  void add(const std::string& key, const std::string& value) { text_ += key + " " + value + "\n"; }
  void add_input(const std::string& key, const fs::path& path) {
    add(key, path.filename().string() + " fnv1a64:" + io::fnv1a_hex(io::read_file(path)));
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

inline fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out += suffix;
  return out;
}

/// "1..9" (inclusive) or "1,2,5".
inline std::vector<std::size_t> parse_rank_list(const std::string& text) {
  std::vector<std::size_t> ranks;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    auto a = io::parse_int<std::size_t>(text.substr(0, dots));
    auto b = io::parse_int<std::size_t>(text.substr(dots + 2));
    if (!a || !b || *a < 1 || *b < *a) throw UsageError("invalid rank range '" + text + "' (expected A..B)");
    for (std::size_t r = *a; r <= *b; ++r) ranks.push_back(r);
    return ranks;
  }
  for (const auto& f : io::split(text, ',')) {
    auto r = io::parse_int<std::size_t>(f);
    if (!r || *r < 1) throw UsageError("invalid rank '" + f + "'");
    ranks.push_back(*r);
  }
  return ranks;
}

/// "I,J,K" with positive entries.
inline Dims parse_dims(const std::string& text) {
  const auto f = io::split(text, ',');
  if (f.size() != 3) throw UsageError("dims must be I,J,K");
  Dims d{};
  for (std::size_t m = 0; m < 3; ++m) {
    auto v = io::parse_int<std::size_t>(f[m]);
    if (!v || *v == 0) throw UsageError("invalid dimension '" + f[m] + "'");
    d[m] = *v;
  }
  return d;
}

inline std::string percent(std::size_t part, std::size_t whole) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", whole ? 100.0 * static_cast<double>(part) / static_cast<double>(whole) : 0.0);
  return buf;
}

// ---------------------------------------------------------------- tensorize

struct TensorizeOptions {
  fs::path events;
  fs::path schema;
  fs::path out;
};

inline int cmd_tensorize(const TensorizeOptions& opt, std::ostream& out, std::ostream& err) {
  const FeatureSchema schema = io::read_schema(opt.schema);
  const std::vector<EventRecord> records = io::read_events(opt.events);
  const BuildResult built = build_tensor(records, schema);
  const Tensor3& raw = built.dataset.tensor;
  const Dims& d = raw.dims();
  const std::size_t missing = raw.missing_count();
  if (built.report.records_dropped)
    err << "warning: dropped " << built.report.records_dropped << " records outside the study window\n";

  const ImputeResult imputed = impute_mean(minmax_normalize(built.dataset));

  OutputSet outputs;
  outputs.write(opt.out, io::format_tensor(imputed.dataset.tensor));
  outputs.write(io::labels_path_for(opt.out), io::format_labels(imputed.dataset.labels));
  Manifest manifest("tensorize");
  manifest.add_input("events", opt.events);
  manifest.add_input("schema", opt.schema);
  manifest.add("dims", std::to_string(d[0]) + " " + std::to_string(d[1]) + " " + std::to_string(d[2]));
  manifest.add("records_used", std::to_string(built.report.records_used));
  manifest.add("records_dropped", std::to_string(built.report.records_dropped));
  manifest.add("missing_cells", std::to_string(missing));
  manifest.add("imputed_cells", std::to_string(imputed.report.total()));
  outputs.write(with_suffix(opt.out, ".manifest"), manifest.text());
  outputs.commit();

  out << "dims " << d[0] << " " << d[1] << " " << d[2] << "\n";
  out << "missing " << missing << " of " << raw.size() << " cells (" << percent(missing, raw.size())
      << "), imputed with variable means\n";
  return kExitOk;
}

// ---------------------------------------------------------------------- fit

struct FitOptions {
  fs::path tensor;
  std::optional<fs::path> labels;  // default: <tensor>.labels when present
  std::optional<fs::path> truth;   // ground-truth model for a recovery score
  fs::path out;
  FitConfig config;
  std::size_t threads = 1;
};

// Reads a tensor and its labels, imputing variable means for missing cells.
inline TensorDataset load_dataset(const fs::path& tensor_path, const std::optional<fs::path>& labels_path,
                                  std::ostream& out) {
  TensorDataset ds;
  ds.tensor = io::read_tensor(tensor_path);
  const fs::path lp = labels_path.value_or(io::labels_path_for(tensor_path));
  if (labels_path || fs::exists(lp)) ds.labels = io::read_labels(lp);
  else ds.labels = AxisLabels::generic(ds.tensor.dims());
  ds.validate();
  if (!ds.tensor.fully_observed()) {
    const ImputeResult imputed = impute_mean(ds);
    out << "imputed " << imputed.report.total() << " missing cells with variable means\n";
    ds = imputed.dataset;
  }
  return ds;
}

inline int cmd_fit(const FitOptions& opt, std::ostream& out, std::ostream& err) {
  opt.config.validate();
  detail::require(opt.threads >= 1, "threads must be at least 1");
  const TensorDataset ds = load_dataset(opt.tensor, opt.labels, out);
  const Dims& d = ds.tensor.dims();
  out << "seed " << opt.config.seed << "\n";

  const RestartResult result = fit_restarts(ds.tensor, opt.config, opt.threads);
  const RestartDiagnostics& best = result.restarts[result.best_index];
  for (const RestartDiagnostics& r : result.restarts)
    if (!r.note.empty()) err << "warning: restart with seed " << r.seed << ": " << r.note << "\n";

  io::ModelFile file;
  file.model = result.best.model;
  file.labels = ds.labels;
  file.metadata = {{"seed", std::to_string(best.seed)},
                   {"base_seed", std::to_string(opt.config.seed)},
                   {"restarts", std::to_string(opt.config.n_restarts)},
                   {"sweeps", std::to_string(best.sweeps)},
                   {"converged", best.converged ? "true" : "false"},
                   {"relative_error", io::format_double(best.relative_error)},
                   {"core_consistency", std::isnan(best.core_consistency) ? "NA" : io::format_double(best.core_consistency)}};

  std::optional<double> fms;
  if (opt.truth) {
    const io::ModelFile truth = io::read_model(*opt.truth);
    fms = factor_match_score(result.best.model, truth.model);
    file.metadata.emplace_back("factor_match_score", io::format_double(*fms));
  }

  Manifest manifest("fit");
  manifest.add_input("tensor", opt.tensor);
  if (opt.truth) manifest.add_input("truth", *opt.truth);
  manifest.add("dims", std::to_string(d[0]) + " " + std::to_string(d[1]) + " " + std::to_string(d[2]));
  manifest.add("rank", std::to_string(opt.config.rank));
  manifest.add("restarts", std::to_string(opt.config.n_restarts));
  manifest.add("seed", std::to_string(opt.config.seed));
  manifest.add("tol", io::format_double(opt.config.tol));
  manifest.add("max_sweeps", std::to_string(opt.config.max_sweeps));
  manifest.add("selected_seed", std::to_string(best.seed));
  for (const RestartDiagnostics& r : result.restarts)
    manifest.add("restart", "seed=" + std::to_string(r.seed) + " relative_error=" + io::format_double(r.relative_error) +
                                " core_consistency=" +
                                (std::isnan(r.core_consistency) ? std::string("NA") : io::format_double(r.core_consistency)) +
                                " sweeps=" + std::to_string(r.sweeps));

  OutputSet outputs;
  outputs.write(opt.out, io::format_model(file));
  outputs.write(with_suffix(opt.out, ".manifest"), manifest.text());
  outputs.commit();

  out << "selected restart seed " << best.seed << ": relative_error " << best.relative_error
      << ", core_consistency " << best.core_consistency << ", sweeps " << best.sweeps << "\n";
  if (fms) out << "factor_match_score " << *fms << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- rank-scan

struct RankScanCommandOptions {
  fs::path tensor;
  std::string ranks = "1..9";
  std::size_t n_init = 10;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  std::size_t max_sweeps = 500;
  std::size_t threads = 1;
  fs::path out;
};

inline int cmd_rank_scan(const RankScanCommandOptions& opt, std::ostream& out, std::ostream& err) {
  const std::vector<std::size_t> ranks = parse_rank_list(opt.ranks);
  detail::require(opt.n_init >= 1, "inits must be at least 1");
  detail::require(opt.tol > 0.0, "tol must be positive");
  detail::require(opt.max_sweeps >= 1, "max_sweeps must be at least 1");
  detail::require(opt.threads >= 1, "threads must be at least 1");
  const TensorDataset ds = load_dataset(opt.tensor, std::nullopt, out);
  out << "seed " << opt.seed << "\n";

  RankScanOptions so;
  so.n_init = opt.n_init;
  so.seed = opt.seed;
  so.tol = opt.tol;
  so.max_sweeps = opt.max_sweeps;
  so.threads = opt.threads;
  const RankScan scan = rank_scan(ds.tensor, ranks, so);
  for (const std::string& w : scan.warnings) err << "warning: " << w << "\n";

  Manifest manifest("rank-scan");
  manifest.add_input("tensor", opt.tensor);
  manifest.add("ranks", opt.ranks);
  manifest.add("inits", std::to_string(opt.n_init));
  manifest.add("seed", std::to_string(opt.seed));
  manifest.add("tol", io::format_double(opt.tol));
  manifest.add("max_sweeps", std::to_string(opt.max_sweeps));
  std::optional<std::size_t> selected;
  bool consecutive = ranks.size() >= 3;
  for (std::size_t i = 1; i < ranks.size(); ++i) consecutive = consecutive && ranks[i] == ranks[i - 1] + 1;
  if (consecutive) {
    selected = select_rank(scan);
    manifest.add("selected_rank", std::to_string(*selected));
  }

  OutputSet outputs;
  outputs.write(opt.out, io::format_rank_scan(scan));
  outputs.write(with_suffix(opt.out, ".manifest"), manifest.text());
  outputs.commit();

  if (selected) out << "selected rank " << *selected << "\n";
  else out << "rank selection needs at least 3 consecutive ranks; none selected\n";
  return kExitOk;
}

// ------------------------------------------------------------------- report

struct ReportOptions {
  fs::path model;
  std::optional<fs::path> metadata;
  fs::path out;  // directory
  double top_fraction = 0.25;
  std::size_t top_k = 15;
  std::vector<std::string> tests = {"welch", "anova"};
  std::vector<std::string> metrics;  // empty: every metric in the metadata
};

inline int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err) {
  detail::require(opt.top_fraction > 0.0 && opt.top_fraction <= 1.0, "top fraction must lie in (0, 1]");
  detail::require(opt.top_k >= 1, "top-k must be at least 1");
  for (const std::string& t : opt.tests)
    detail::require(t == "welch" || t == "ks" || t == "anova" || t == "kruskal",
                    "unknown test '" + t + "' (expected welch, ks, anova or kruskal)");
  const io::ModelFile file = io::read_model(opt.model);
  const CPModel& model = file.model;
  const std::size_t rank = model.rank();
  const std::size_t k = std::min<std::size_t>(opt.top_k, static_cast<std::size_t>(model.v.rows()));
  std::optional<MetadataTable> metadata;
  if (opt.metadata) metadata = io::read_metadata(*opt.metadata);
  std::vector<std::string> metrics = opt.metrics;
  if (metadata && metrics.empty()) metrics = metadata->metrics();
  if (!metadata && !metrics.empty()) throw UsageError("--metrics requires --metadata");
  for (const std::string& m : metrics)
    if (!metadata->has_metric(m)) throw DataError("metadata has no metric '" + m + "'");

  OutputSet outputs;
  const fs::path staging = with_suffix(opt.out, ".tmp");
  std::error_code ec;
  fs::remove_all(staging, ec);
  fs::create_directories(staging);
  outputs.track(staging);

  std::vector<Membership> memberships;
  for (std::size_t r = 1; r <= rank; ++r) {
    const std::string prefix = "component_" + std::to_string(r);
    std::string vars = "rank,variable,weight\n";
    std::size_t pos = 1;
    for (const auto& [name, w] : top_variables(model, file.labels, r, k))
      vars += std::to_string(pos++) + "," + name + "," + io::format_double(w) + "\n";
    io::write_file_atomic(staging / (prefix + "_top_variables.csv"), vars);

    Membership m = top_individuals(model, file.labels, r, opt.top_fraction);
    std::string members = "rank,user_id,weight\n";
    pos = 1;
    for (const auto& [user, w] : m.individuals)
      members += std::to_string(pos++) + "," + user + "," + io::format_double(w) + "\n";
    io::write_file_atomic(staging / (prefix + "_membership.csv"), members);
    memberships.push_back(std::move(m));

    std::string temporal = "day,weight\n";
    for (const auto& [day, w] : temporal_profile(model, file.labels, r))
      temporal += std::to_string(day) + "," + io::format_double(w) + "\n";
    io::write_file_atomic(staging / (prefix + "_temporal.csv"), temporal);
  }

  // Individuals among the top members of more than one component.
  std::map<std::string, std::vector<std::size_t>> member_of;
  for (const Membership& m : memberships)
    for (const auto& [user, w] : m.individuals) member_of[user].push_back(m.component);
  std::string overlap = "user_id,components\n";
  for (const auto& [user, comps] : member_of) {
    if (comps.size() < 2) continue;
    overlap += user + ",";
    for (std::size_t i = 0; i < comps.size(); ++i) overlap += (i ? "|" : "") + std::to_string(comps[i]);
    overlap += "\n";
  }
  io::write_file_atomic(staging / "membership_overlap.csv", overlap);

  for (const std::string& metric : metrics) {
    std::string rows = io::test_results_header();
    std::optional<GroupComparison> last;
    for (const std::string& test : opt.tests) {
      GroupComparison cmp = compare_groups(memberships, *metadata, metric, test);
      for (const TestResult& t : cmp.tests) rows += io::format_test_result(t);
      last = std::move(cmp);
    }
    io::write_file_atomic(staging / ("metric_" + metric + "_tests.csv"), rows);
    if (!last) continue;
    std::string groups = "group,n_used,n_dropped\n";
    for (std::size_t g = 0; g < last->groups.size(); ++g) {
      groups += last->groups[g].label + "," + std::to_string(last->groups[g].size()) + "," +
                std::to_string(last->dropped[g]) + "\n";
      io::write_file_atomic(staging / ("metric_" + metric + "_kde_" + last->groups[g].label + ".csv"),
                            io::format_kde(last->kde[g]));
    }
    for (const std::string& s : last->skipped) {
      groups += s + ",skipped,\n";
      err << "warning: metric " << metric << ": " << s << " has fewer than 2 values; skipped\n";
    }
    io::write_file_atomic(staging / ("metric_" + metric + "_groups.csv"), groups);
  }

  Manifest manifest("report");
  manifest.add_input("model", opt.model);
  if (opt.metadata) manifest.add_input("metadata", *opt.metadata);
  manifest.add("top_fraction", io::format_double(opt.top_fraction));
  manifest.add("top_k", std::to_string(k));
  std::string tests;
  for (const auto& t : opt.tests) tests += (tests.empty() ? "" : ",") + t;
  manifest.add("tests", tests);
  for (const auto& m : metrics) manifest.add("metric", m);
  io::write_file_atomic(staging / "manifest.txt", manifest.text());

  fs::remove_all(opt.out, ec);
  fs::rename(staging, opt.out);
  outputs.commit();

  out << "report for " << rank << " components written to " << opt.out.string() << "\n";
  return kExitOk;
}

// -------------------------------------------------------------------- synth

struct SynthOptions {
  SynthSpec spec;
  fs::path out_prefix;
};

inline int cmd_synth(const SynthOptions& opt, std::ostream& out, std::ostream& err) {
  opt.spec.validate();
  for (const std::string& w : opt.spec.warnings()) err << "warning: " << w << "\n";
  const SynthResult syn = gen_synthetic(opt.spec);
  const Dims& d = opt.spec.dims;
  const fs::path tensor_path = with_suffix(opt.out_prefix, ".tensor");
  const fs::path truth_path = with_suffix(opt.out_prefix, ".truth.model");

  io::ModelFile truth;
  truth.model = syn.truth;
  truth.labels = syn.dataset.labels;
  truth.metadata = {{"seed", std::to_string(opt.spec.seed)}, {"source", "synthetic ground truth"}};

  Manifest manifest("synth");
  manifest.add("dims", std::to_string(d[0]) + " " + std::to_string(d[1]) + " " + std::to_string(d[2]));
  manifest.add("rank", std::to_string(opt.spec.rank));
  manifest.add("seed", std::to_string(opt.spec.seed));
  manifest.add("snr_db", opt.spec.noise_snr_db ? io::format_double(*opt.spec.noise_snr_db) : "none");
  manifest.add("missing_frac", io::format_double(opt.spec.missing_frac));
  manifest.add("factor_sparsity", io::format_double(opt.spec.factor_sparsity));
  manifest.add("masked_cells", std::to_string(syn.masked_cells));

  OutputSet outputs;
  outputs.write(tensor_path, io::format_tensor(syn.dataset.tensor));
  outputs.write(io::labels_path_for(tensor_path), io::format_labels(syn.dataset.labels));
  outputs.write(truth_path, io::format_model(truth));
  outputs.write(with_suffix(opt.out_prefix, ".manifest"), manifest.text());
  outputs.commit();

  out << "seed " << opt.spec.seed << "\n";
  out << "dims " << d[0] << " " << d[1] << " " << d[2] << ", rank " << opt.spec.rank << "\n";
  out << "masked " << syn.masked_cells << " cells (" << percent(syn.masked_cells, element_count(d)) << ")\n";
  if (syn.realized_snr_db) out << "realized snr " << *syn.realized_snr_db << " dB before clipping\n";
  return kExitOk;
}

// ------------------------------------------------------------------- schema

inline int cmd_schema(const fs::path& out_path, std::ostream& out) {
  const FeatureSchema schema = default_schema();
  io::write_file_atomic(out_path, io::format_schema(schema));
  out << "wrote default schema with " << schema.variables.size() << " variables\n";
  return kExitOk;
}

/// Runs a command, mapping exceptions to exit codes and messages on `err`.
template <typename Fn>
int run_guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace lifetensor::cli
