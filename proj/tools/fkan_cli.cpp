// fkan: run federated KAN/MLP experiment grids and post-process their metrics.
//
// Exit codes: 0 success, 1 runtime failure (or failed gradcheck),
// 2 usage or config error, 3 some grid cells failed.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fkan/config.hpp"
#include "fkan/federation.hpp"
#include "fkan/gradcheck.hpp"
#include "fkan/grid.hpp"
#include "fkan/metrics.hpp"
#include "fkan/report.hpp"
#include "fkan/weights_io.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPartial = 3;

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_run(const std::string& config_path, std::string metrics_path, std::size_t jobs, bool timing,
            const std::string& weights_dir, bool quiet) {
  const fkan::ExperimentGrid grid = fkan::load_config(config_path);
  if (metrics_path.empty()) metrics_path = std::filesystem::path(config_path).stem().string() + ".metrics.csv";
  fkan::GridOptions options;
  options.jobs = jobs;
  options.record_wall_time = timing;
  options.weights_dir = weights_dir;
  std::size_t done = 0;
  const std::size_t total = grid.cell_count();
  if (!quiet) {
    options.on_cell_done = [&](const fkan::CellKey& key, const std::string& error) {
      ++done;
      std::cerr << "[" << done << "/" << total << "] " << key.to_string();
      if (error.empty()) std::cerr << " ok\n";
      else std::cerr << " FAILED: " << error << "\n";
    };
  }
  const fkan::GridReport report = fkan::run_grid(grid, std::filesystem::path(metrics_path), options);
  std::cerr << report.cells_ok << "/" << report.cells_total << " cells ok, " << report.rows_written
            << " rows -> " << metrics_path << "\n";
  if (!report.failures.empty()) {
    std::cerr << report.failures.size() << " cell(s) failed; see " << fkan::errors_path_for(metrics_path).string()
              << "\n";
    return kExitPartial;
  }
  return 0;
}

int cmd_summarize(const std::string& metrics_path, std::string out_dir) {
  const fkan::Summary summary = fkan::summarize(fkan::read_metrics(std::filesystem::path(metrics_path)));
  const std::filesystem::path in(metrics_path);
  const std::filesystem::path dir = out_dir.empty() ? in.parent_path() : std::filesystem::path(out_dir);
  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::string stem = in.filename().string();
  if (const auto pos = stem.find('.'); pos != std::string::npos) stem = stem.substr(0, pos);
  write_file(dir / (stem + ".summary.csv"), fkan::summary_csv(summary));
  write_file(dir / (stem + ".summary.txt"), fkan::summary_text(summary));
  write_file(dir / (stem + ".models.csv"), fkan::model_summary_csv(summary));
  std::cout << fkan::summary_text(summary);
  return 0;
}

int cmd_curves(const std::string& metrics_path, const std::string& select, const std::string& metric,
               const std::string& out) {
  const auto points = fkan::emit_curves(fkan::read_metrics(std::filesystem::path(metrics_path)),
                                        fkan::CurveSelector::parse(select), fkan::parse_curve_metric(metric));
  const std::string text = fkan::curves_csv(points);
  if (out.empty()) std::cout << text;
  else write_file(out, text);
  return 0;
}

int cmd_gradcheck(const std::string& model, std::size_t seed, std::size_t batch, std::vector<std::size_t> widths) {
  fkan::Architecture arch;
  arch.kind = fkan::parse_model_kind(model);
  arch.widths = std::move(widths);
  arch.validate();
  fkan::GradCheckOptions options;
  options.seed = seed;
  options.batch = batch;
  const fkan::GradCheckReport r = fkan::gradient_check(arch, options);
  std::cout << model << " gradcheck: compared " << r.compared << ", skipped " << r.skipped
            << ", max relative error " << r.max_relative_error;
  if (!r.worst.empty()) std::cout << " at " << r.worst;
  std::cout << (r.passed ? " -> PASS\n" : " -> FAIL\n");
  return r.passed ? 0 : kExitRuntime;
}

int cmd_evaluate(const std::string& weights_path, const std::string& config_path, const std::string& dataset) {
  const fkan::ExperimentGrid grid = fkan::load_config(config_path);
  const fkan::DatasetSource* source = nullptr;
  for (const auto& d : grid.datasets)
    if (d.name == dataset) source = &d;
  if (!source) throw fkan::ConfigError("dataset '" + dataset + "' is not in " + config_path);
  const fkan::Split split =
      fkan::prepare_split(fkan::load_dataset_source(*source), grid.test_fraction, source->split_seed);
  const fkan::Model model = fkan::model_from_weights(fkan::load_weights(weights_path));
  const fkan::Evaluation e = fkan::evaluate(model, split.test);
  std::cout << "accuracy " << fkan::format_double(e.accuracy) << "\nloss " << fkan::format_double(e.loss) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated KAN/MLP experiment runner"};
  app.require_subcommand(1);

  std::string config_path, metrics_path, out_path, weights_dir, select, metric = "both", model, dataset;
  std::size_t jobs = 1, seed = 0, batch = 16;
  bool timing = false, quiet = false;
  std::vector<std::size_t> widths = {8, 25, 50, 2};

  auto* run = app.add_subcommand("run", "Run every cell of an experiment config");
  run->add_option("config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", metrics_path, "Metrics CSV (default <config stem>.metrics.csv)");
  run->add_option("-j,--jobs", jobs, "Cells trained concurrently")->check(CLI::PositiveNumber);
  run->add_flag("--timing", timing, "Record measured wall_time_ms instead of 0");
  run->add_option("--weights-dir", weights_dir, "Save each cell's final weights here");
  run->add_flag("-q,--quiet", quiet, "No per-cell progress");

  auto* summarize = app.add_subcommand("summarize", "Final-round accuracy tables from a metrics file");
  summarize->add_option("metrics", metrics_path, "Metrics CSV")->required()->check(CLI::ExistingFile);
  summarize->add_option("--out-dir", out_path, "Directory for the summary files (default: next to metrics)");

  auto* curves = app.add_subcommand("curves", "Per-round series for plotting");
  curves->add_option("metrics", metrics_path, "Metrics CSV")->required()->check(CLI::ExistingFile);
  curves->add_option("--select", select, "key=value,... over dataset, model, strategy, client_count, seed")
      ->required();
  curves->add_option("--metric", metric, "accuracy, loss or both")->check(CLI::IsMember({"accuracy", "loss", "both"}));
  curves->add_option("-o,--output", out_path, "Output CSV (default stdout)");

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
  gradcheck->add_option("model", model, "kan or mlp")->required()->check(CLI::IsMember({"kan", "mlp"}));
  gradcheck->add_option("--seed", seed, "Seed for weights and batch");
  gradcheck->add_option("--batch", batch, "Batch size")->check(CLI::PositiveNumber);
  gradcheck->add_option("--widths", widths, "Layer widths")->delimiter(',');

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate saved weights on a dataset's test split");
  evaluate->add_option("weights", out_path, "Weights JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--config", config_path, "Config defining the dataset")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--dataset", dataset, "Dataset name")->required();

  auto* version = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(config_path, metrics_path, jobs, timing, weights_dir, quiet);
    if (*summarize) return cmd_summarize(metrics_path, out_path);
    if (*curves) return cmd_curves(metrics_path, select, metric, out_path);
    if (*gradcheck) return cmd_gradcheck(model, seed, batch, widths);
    if (*evaluate) return cmd_evaluate(out_path, config_path, dataset);
    if (*version) {
      std::cout << "fkan " << FKAN_VERSION << " (metrics v1, weights v1)\n";
      return 0;
    }
  } catch (const fkan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
