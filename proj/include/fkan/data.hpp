#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fkan/tensor.hpp"

namespace fkan {

/// Feature matrix plus dense integer labels in [0, class_count).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::size_t class_count = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return features.cols(); }
  /// Rows at `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Samples per class.
  std::vector<std::size_t> class_histogram() const;
};

/// One client's private slice of the training set.
struct ClientShard {
  std::size_t client_id = 0;
  std::vector<std::size_t> indices;
};

struct CsvSchema {
  std::string label_column;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> drop_columns;
  char delimiter = ',';
};

/// Reads a headered CSV (quoted fields allowed). Rows with a missing value
/// (empty, NA, NaN, null, ?) are dropped; categorical columns are one-hot
/// encoded and labels indexed in first-appearance order. Features are
/// returned raw; normalization happens after the split (see prepare_split).
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

struct Split {
  Dataset train;
  Dataset test;
};

/// Stratified split: each class contributes round(test_fraction * n_c)
/// samples to test, clamped to [1, n_c - 1]. Requires 0 < fraction < 0.5
/// and at least two samples per class.
Split train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// Per-feature z-score with population statistics. Constant features are
/// only centered.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
};

/// Split, fit normalization on the training portion only, apply to both.
Split prepare_split(const Dataset& raw, double test_fraction, std::uint64_t seed);

/// IID partition with slightly uneven sizes: proportional to a
/// Dirichlet(10, ..., 10) draw, every shard at least max(1, min_size)
/// (capped at n / k).
std::vector<ClientShard> partition_uneven(const Dataset& train, std::size_t clients,
                                          std::uint64_t seed, std::size_t min_size = 1);

/// Label-skew partition: every class is split across clients by its own
/// Dirichlet(alpha) draw. Empty shards take one sample from the largest.
std::vector<ClientShard> partition_dirichlet(const Dataset& train, std::size_t clients,
                                             double alpha, std::uint64_t seed);

/// Throws std::logic_error unless shards are non-empty, disjoint and cover [0, n).
void validate_partition(const std::vector<ClientShard>& shards, std::size_t sample_count);

struct SyntheticSpec {
  std::size_t n_samples = 1000;
  std::size_t n_features = 8;
  std::size_t class_count = 2;
  double cluster_separation = 3.0;
  double label_noise = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Balanced isotropic Gaussian blobs (unit variance). Class centers sit
/// cluster_separation apart; a label_noise fraction of labels is replaced
/// by a different class chosen uniformly.
Dataset synth_generate(const SyntheticSpec& spec);

}  // namespace fkan
