#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fkan {

/// First line of every metrics file; bumped when the columns change.
inline constexpr const char* kMetricsVersionLine = "# fkan metrics v1";
inline constexpr const char* kMetricsHeader =
    "dataset,model,strategy,client_count,seed,round,accuracy,loss,wall_time_ms";

/// One row per (cell, round). Numeric fields keep their original text so
/// that downstream tools can copy values through without reformatting.
struct MetricsRow {
  std::string dataset;
  std::string model;
  std::string strategy;
  std::size_t client_count = 0;
  std::uint64_t seed = 0;
  std::size_t round = 0;
  std::string accuracy;
  std::string loss;
  std::string wall_time_ms;

  double accuracy_value() const;
  double loss_value() const;
};

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

/// Throws std::runtime_error naming the line on a bad version line, header
/// or row.
std::vector<MetricsRow> read_metrics(std::istream& in);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

}  // namespace fkan
