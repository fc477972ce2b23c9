#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fkan/metrics.hpp"

namespace fkan {

/// Final-round accuracy of one (dataset, model, strategy, client count)
/// cell, averaged over its seeds.
struct SummaryCell {
  std::string dataset;
  std::string model;
  std::string strategy;
  std::size_t client_count = 0;
  double accuracy = 0.0;
  std::size_t seeds = 0;
};

/// Per model, dataset and client count: mean over strategies and the best
/// strategy.
struct ModelAggregate {
  std::string model;
  std::string dataset;
  std::size_t client_count = 0;
  double average = 0.0;
  double best = 0.0;
  std::string best_strategy;
};

struct Summary {
  std::vector<std::string> datasets;   // first-appearance order
  std::vector<std::string> models;     // sorted
  std::vector<std::string> strategies; // canonical strategy order, then others sorted
  std::vector<std::size_t> client_counts;
  std::vector<SummaryCell> cells;
  std::vector<ModelAggregate> model_aggregates;

  std::optional<double> accuracy(const std::string& dataset, const std::string& model, const std::string& strategy,
                                 std::size_t client_count) const;
};

/// Throws std::runtime_error on empty metrics.
Summary summarize(const std::vector<MetricsRow>& rows);

/// "97.34" for 0.97341.
std::string format_percent(double fraction);

/// dataset,strategy,client_count,<one column per model>; percentages.
std::string summary_csv(const Summary& summary);
/// The same table with aligned columns.
std::string summary_text(const Summary& summary);
/// model,dataset,client_count,average,best,best_strategy; percentages.
std::string model_summary_csv(const Summary& summary);

enum class CurveMetric { accuracy, loss, both };
CurveMetric parse_curve_metric(const std::string& name);

/// Filters of the form "dataset=airline,model=kan,client_count=5".
struct CurveSelector {
  std::map<std::string, std::string> filters;

  /// Keys: dataset, model, strategy, client_count, seed. Throws
  /// std::invalid_argument on malformed text or unknown keys.
  static CurveSelector parse(const std::string& text);
  bool matches(const MetricsRow& row) const;
};

struct CurvePoint {
  std::size_t round = 0;
  std::string series;
  /// Copied verbatim from the metrics file.
  std::string value;
};

/// Long-format curves. Series are named after the cell keys that vary in
/// the selection ("strategy=krum"), with ":accuracy"/":loss" appended when
/// both metrics are requested. Throws std::runtime_error on an empty
/// selection.
std::vector<CurvePoint> emit_curves(const std::vector<MetricsRow>& rows, const CurveSelector& selector,
                                    CurveMetric metric);
std::string curves_csv(const std::vector<CurvePoint>& points);

}  // namespace fkan
