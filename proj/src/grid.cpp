#include "fkan/grid.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "fkan/federation.hpp"
#include "fkan/metrics.hpp"
#include "fkan/rng.hpp"
#include "fkan/weights_io.hpp"

namespace fkan {

namespace {

struct PreparedDataset {
  std::optional<Split> split;
  std::string error;
};

std::vector<PreparedDataset> prepare_all(const ExperimentGrid& grid) {
  std::vector<PreparedDataset> out(grid.datasets.size());
  for (std::size_t d = 0; d < grid.datasets.size(); ++d) {
    try {
      out[d].split = prepare_split(load_dataset_source(grid.datasets[d]), grid.test_fraction,
                                   grid.datasets[d].split_seed);
    } catch (const std::exception& e) {
      out[d].error = "dataset '" + grid.datasets[d].name + "': " + e.what();
    }
  }
  return out;
}

std::vector<ClientShard> make_shards(const ExperimentGrid& grid, const Dataset& train, const CellKey& key) {
  const std::uint64_t seed = partition_seed(key.seed, key.client_count);
  if (grid.partition.kind == PartitionKind::dirichlet)
    return partition_dirichlet(train, key.client_count, grid.partition.alpha, seed);
  return partition_uneven(train, key.client_count, seed, grid.partition.min_size);
}

std::string weights_file_name(const CellKey& key) {
  return key.dataset + "_" + to_string(key.model) + "_" + key.strategy + "_k" + std::to_string(key.client_count) +
         "_s" + std::to_string(key.seed) + ".json";
}

struct CellOutcome {
  std::vector<MetricsRow> rows;
  std::string error;
};

CellOutcome run_cell(const ExperimentGrid& grid, const Cell& cell, const PreparedDataset& data,
                     const GridOptions& options) {
  CellOutcome outcome;
  try {
    if (!data.split) throw std::runtime_error(data.error);
    if (options.before_cell) options.before_cell(cell.key);
    const Split& split = *data.split;
    const std::vector<ClientShard> shards = make_shards(grid, split.train, cell.key);
    FederationEngine engine(split.train, split.test, shards, cell.federation);
    for (std::size_t r = 0; r < cell.federation.num_rounds; ++r) {
      const RoundRecord rec = engine.run_round();
      MetricsRow row;
      row.dataset = cell.key.dataset;
      row.model = to_string(cell.key.model);
      row.strategy = cell.key.strategy;
      row.client_count = cell.key.client_count;
      row.seed = cell.key.seed;
      row.round = rec.round;
      row.accuracy = format_double(rec.global_test_accuracy);
      row.loss = format_double(rec.global_test_loss);
      row.wall_time_ms = options.record_wall_time ? format_double(rec.wall_time_ms) : "0";
      outcome.rows.push_back(std::move(row));
    }
    if (!options.weights_dir.empty()) {
      std::filesystem::create_directories(options.weights_dir);
      save_weights(options.weights_dir / weights_file_name(cell.key), engine.global_model().architecture(),
                   engine.global_model().params());
    }
  } catch (const std::exception& e) {
    outcome.rows.clear();
    outcome.error = e.what();
    if (outcome.error.empty()) outcome.error = "unknown error";
  }
  return outcome;
}

}  // namespace

Dataset load_dataset_source(const DatasetSource& source) {
  if (source.synthetic) return synth_generate(*source.synthetic);
  return load_csv(source.csv_path, source.schema);
}

std::uint64_t partition_seed(std::uint64_t seed, std::size_t client_count) {
  return derive_seed({seed, client_count, 0x9a27ULL});
}

GridReport run_grid(const ExperimentGrid& grid, std::ostream& metrics, const GridOptions& options) {
  const std::vector<Cell> cells = grid.cells();
  const std::vector<PreparedDataset> data = prepare_all(grid);
  GridReport report;
  report.cells_total = cells.size();
  write_metrics_header(metrics);
  metrics.flush();

  const long n = static_cast<long>(cells.size());
  const int jobs = static_cast<int>(std::max<std::size_t>(1, options.jobs));
#pragma omp parallel for ordered schedule(dynamic, 1) num_threads(jobs) if (jobs > 1)
  for (long i = 0; i < n; ++i) {
    const Cell& cell = cells[static_cast<std::size_t>(i)];
    CellOutcome outcome = run_cell(grid, cell, data[cell.dataset_index], options);
#pragma omp ordered
    {
      if (outcome.error.empty()) {
        for (const MetricsRow& row : outcome.rows) write_metrics_row(metrics, row);
        metrics.flush();
        report.rows_written += outcome.rows.size();
        ++report.cells_ok;
      } else {
        report.failures.push_back({cell.key, outcome.error});
      }
      if (options.on_cell_done) options.on_cell_done(cell.key, outcome.error);
    }
  }
  return report;
}

std::filesystem::path errors_path_for(const std::filesystem::path& metrics_path) {
  std::filesystem::path p = metrics_path;
  p += ".errors.csv";
  return p;
}

GridReport run_grid(const ExperimentGrid& grid, const std::filesystem::path& metrics_path,
                    const GridOptions& options) {
  if (metrics_path.has_parent_path()) std::filesystem::create_directories(metrics_path.parent_path());
  std::ofstream out(metrics_path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + metrics_path.string());
  GridReport report = run_grid(grid, out, options);
  out.close();
  if (!out) throw std::runtime_error("write failed: " + metrics_path.string());

  const std::filesystem::path errors = errors_path_for(metrics_path);
  std::filesystem::remove(errors);
  if (!report.failures.empty()) {
    std::ofstream err(errors, std::ios::binary);
    err << "dataset,model,strategy,client_count,seed,error\n";
    for (const CellFailure& f : report.failures) {
      std::string msg = f.error;
      for (char& c : msg)
        if (c == '\n' || c == '\r') c = ' ';
      std::string quoted = "\"";
      for (char c : msg) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      quoted += '"';
      err << f.key.dataset << ',' << to_string(f.key.model) << ',' << f.key.strategy << ',' << f.key.client_count
          << ',' << f.key.seed << ',' << quoted << '\n';
    }
  }
  return report;
}

}  // namespace fkan
