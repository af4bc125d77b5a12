// lifetensor: behavioral tensor pipeline from the command line.
//
//   lifetensor tensorize --events E.csv --schema S.txt --out X.tensor
//   lifetensor synth     --dims 20,30,25 --rank 3 --seed 1 --out-prefix syn
//   lifetensor rank-scan --tensor X.tensor --ranks 1..9 --inits 10 --out scan.csv
//   lifetensor fit       --tensor X.tensor --rank 3 --restarts 10 --seed 7 --out model.txt
//   lifetensor report    --model model.txt --metadata meta.csv --out report/
//   lifetensor schema    --out schema.txt

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lifetensor/commands.hpp"

namespace cli = lifetensor::cli;

int main(int argc, char** argv) {
  CLI::App app{"Non-negative CP decomposition of longitudinal behavioral sensor tensors"};
  app.require_subcommand(1);
  std::size_t threads = lifetensor::default_threads();

  // tensorize
  cli::TensorizeOptions tz;
  auto* tensorize = app.add_subcommand("tensorize", "Build the normalized, imputed tensor from event logs");
  tensorize->add_option("--events", tz.events, "Events CSV (user_id,stream,state,start_unix,end_unix)")->required();
  tensorize->add_option("--schema", tz.schema, "Feature schema file")->required();
  tensorize->add_option("--out", tz.out, "Output tensor file; labels go to <out>.labels")->required();

  // fit
  cli::FitOptions ft;
  std::string fit_labels;
  std::string fit_truth;
  auto* fit = app.add_subcommand("fit", "Fit a non-negative CP model with random restarts");
  fit->add_option("--tensor", ft.tensor, "Tensor file")->required();
  fit->add_option("--labels", fit_labels, "Labels file (default <tensor>.labels when present)");
  fit->add_option("--truth", fit_truth, "Ground-truth model; reports the factor match score");
  fit->add_option("--rank", ft.config.rank, "Number of components")->required();
  fit->add_option("--restarts", ft.config.n_restarts, "Random restarts")->capture_default_str();
  fit->add_option("--seed", ft.config.seed, "Base seed")->capture_default_str();
  fit->add_option("--tol", ft.config.tol, "Relative error change stopping threshold")->capture_default_str();
  fit->add_option("--max-sweeps", ft.config.max_sweeps, "Maximum HALS sweeps per restart")->capture_default_str();
  fit->add_option("--threads", threads, "Worker threads")->capture_default_str();
  fit->add_option("--out", ft.out, "Output model file")->required();

  // rank-scan
  cli::RankScanCommandOptions rs;
  auto* scan = app.add_subcommand("rank-scan", "Core-consistency scan over candidate ranks");
  scan->add_option("--tensor", rs.tensor, "Tensor file")->required();
  scan->add_option("--ranks", rs.ranks, "Ranks as A..B or a comma list")->capture_default_str();
  scan->add_option("--inits", rs.n_init, "Random initializations per rank")->capture_default_str();
  scan->add_option("--seed", rs.seed, "Base seed")->capture_default_str();
  scan->add_option("--tol", rs.tol, "Relative error change stopping threshold")->capture_default_str();
  scan->add_option("--max-sweeps", rs.max_sweeps, "Maximum HALS sweeps per fit")->capture_default_str();
  scan->add_option("--threads", threads, "Worker threads")->capture_default_str();
  scan->add_option("--out", rs.out, "Output CSV")->required();

  // report
  cli::ReportOptions rp;
  std::string report_metadata;
  auto* report = app.add_subcommand("report", "Per-component tables and metadata comparisons");
  report->add_option("--model", rp.model, "Model file")->required();
  report->add_option("--metadata", report_metadata, "Metadata CSV (user_id,metric,value)");
  report->add_option("--out", rp.out, "Output directory")->required();
  report->add_option("--top-fraction", rp.top_fraction, "Fraction of individuals per membership")->capture_default_str();
  report->add_option("--top-k", rp.top_k, "Top-weighted variables per component")->capture_default_str();
  report->add_option("--tests", rp.tests, "Tests: welch, ks, anova, kruskal")->delimiter(',')->capture_default_str();
  report->add_option("--metrics", rp.metrics, "Metrics to compare (default: all)")->delimiter(',');

  // synth
  cli::SynthOptions sy;
  std::string synth_dims = "20,30,25";
  std::optional<double> snr;
  auto* synth = app.add_subcommand("synth", "Generate a planted low-rank tensor and its ground truth");
  synth->add_option("--dims", synth_dims, "Dimensions I,J,K")->capture_default_str();
  synth->add_option("--rank", sy.spec.rank, "Planted rank")->capture_default_str();
  synth->add_option("--seed", sy.spec.seed, "Seed")->capture_default_str();
  synth->add_option("--snr-db", snr, "Gaussian noise SNR in dB (default: noiseless)");
  synth->add_option("--missing", sy.spec.missing_frac, "Fraction of cells to mask")->capture_default_str();
  synth->add_option("--sparsity", sy.spec.factor_sparsity, "Fraction of zeroed factor entries")->capture_default_str();
  synth->add_option("--out-prefix", sy.out_prefix, "Output prefix")->required();

  // schema
  std::string schema_out;
  auto* schema = app.add_subcommand("schema", "Write the default feature schema");
  schema->add_option("--out", schema_out, "Output schema file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitUsage;
  }

  auto& out = std::cout;
  auto& err = std::cerr;
  return cli::run_guarded(
      [&]() -> int {
        if (*tensorize) return cli::cmd_tensorize(tz, out, err);
        if (*fit) {
          if (!fit_labels.empty()) ft.labels = fit_labels;
          if (!fit_truth.empty()) ft.truth = fit_truth;
          ft.threads = threads;
          return cli::cmd_fit(ft, out, err);
        }
        if (*scan) {
          rs.threads = threads;
          return cli::cmd_rank_scan(rs, out, err);
        }
        if (*report) {
          if (!report_metadata.empty()) rp.metadata = report_metadata;
          return cli::cmd_report(rp, out, err);
        }
        if (*synth) {
          sy.spec.dims = cli::parse_dims(synth_dims);
          sy.spec.noise_snr_db = snr;
          return cli::cmd_synth(sy, out, err);
        }
        return cli::cmd_schema(schema_out, out);
      },
      err);
}
