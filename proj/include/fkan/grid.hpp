#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fkan/config.hpp"
#include "fkan/data.hpp"

namespace fkan {

struct GridOptions {
  /// Cells run concurrently. Output order does not depend on this.
  std::size_t jobs = 1;
  /// Write measured wall_time_ms; otherwise 0 so reruns are byte-identical.
  bool record_wall_time = false;
  /// Final global weights per cell go here when non-empty.
  std::filesystem::path weights_dir;
  /// Called before each cell trains; throwing fails that cell only.
  std::function<void(const CellKey&)> before_cell;
  /// Progress callback, invoked in canonical order.
  std::function<void(const CellKey&, const std::string& error)> on_cell_done;
};

struct CellFailure {
  CellKey key;
  std::string error;
};

struct GridReport {
  std::size_t cells_total = 0;
  std::size_t cells_ok = 0;
  std::size_t rows_written = 0;
  std::vector<CellFailure> failures;
};

/// Raw dataset for a source (synthetic draw or CSV load).
Dataset load_dataset_source(const DatasetSource& source);

/// Seed of the client partition for one (cell seed, client count); the
/// same for every model and strategy so they see identical shards.
std::uint64_t partition_seed(std::uint64_t seed, std::size_t client_count);

/// Runs every cell and streams metrics rows in canonical cell order. A
/// cell's rows are written (and flushed) only once the cell finished, so a
/// failed or interrupted cell leaves no partial rows.
GridReport run_grid(const ExperimentGrid& grid, std::ostream& metrics, const GridOptions& options = {});

/// File variant. Failures also go to errors_path_for(metrics_path); a
/// stale errors file from an earlier run is removed.
GridReport run_grid(const ExperimentGrid& grid, const std::filesystem::path& metrics_path,
                    const GridOptions& options = {});

std::filesystem::path errors_path_for(const std::filesystem::path& metrics_path);

}  // namespace fkan
