#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fkan/aggregation.hpp"
#include "fkan/data.hpp"
#include "fkan/federation.hpp"
#include "fkan/model.hpp"

namespace fkan {

/// Schema violation; the message starts with the offending key path,
/// e.g. "strategies[1].name: ...".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSource {
  std::string name;
  std::optional<SyntheticSpec> synthetic;
  /// Resolved CSV location (empty for synthetic sources).
  std::filesystem::path csv_path;
  CsvSchema schema;
  /// Seeds the train/test split; shared by every cell of this dataset.
  std::uint64_t split_seed = 42;
};

enum class PartitionKind { uneven, dirichlet };

struct PartitionConfig {
  PartitionKind kind = PartitionKind::uneven;
  double alpha = 0.5;
  std::size_t min_size = 1;
};

struct TrainingDefaults {
  std::size_t local_epochs = 3;
  std::size_t batch_size = 64;
  double lr = 0.005;
  std::size_t kan_rounds = 20;
  std::size_t mlp_rounds = 60;
  std::vector<std::size_t> hidden = {25, 50};
  bool persist_optimizer_state = false;
};

struct CellKey {
  std::string dataset;
  ModelKind model = ModelKind::kan;
  std::string strategy;
  std::size_t client_count = 0;
  std::uint64_t seed = 0;

  std::string to_string() const;
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

/// Per-cell patch. Unset match fields match everything; later overrides win.
struct Override {
  std::optional<std::string> dataset;
  std::optional<ModelKind> model;
  std::optional<std::string> strategy;
  std::optional<std::size_t> client_count;
  std::optional<std::uint64_t> seed;

  std::optional<std::size_t> num_rounds;
  std::optional<std::size_t> local_epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::optional<bool> persist_optimizer_state;

  bool matches(const CellKey& key) const;
};

struct Cell {
  CellKey key;
  std::size_t dataset_index = 0;
  FederationConfig federation;
};

struct ExperimentGrid {
  std::vector<DatasetSource> datasets;
  std::vector<ModelKind> models;
  std::vector<StrategyConfig> strategies;
  /// Metrics label per strategy, parallel to `strategies`.
  std::vector<std::string> strategy_labels;
  std::vector<std::size_t> client_counts = {3, 5, 10, 20};
  std::vector<std::uint64_t> seeds = {42};
  PartitionConfig partition;
  double test_fraction = 0.2;
  TrainingDefaults defaults;
  std::vector<Override> overrides;

  /// Canonical order: dataset, model, strategy, client count, seed, each
  /// in config order.
  std::vector<Cell> cells() const;
  std::size_t cell_count() const;
};

/// Parses and validates a JSON config. Relative CSV paths resolve against
/// $FKAN_DATA_DIR when set, otherwise against `base_dir`.
ExperimentGrid parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
/// Reads `path` and resolves relative paths against its directory.
ExperimentGrid load_config(const std::filesystem::path& path);

}  // namespace fkan
