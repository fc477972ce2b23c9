#include "fkan/report.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "fkan/aggregation.hpp"

namespace fkan {

namespace {

using CellTuple = std::tuple<std::string, std::string, std::string, std::size_t>;

std::size_t strategy_rank(const std::string& label) {
  const auto& names = strategy_names();
  const auto it = std::find(names.begin(), names.end(), label);
  return static_cast<std::size_t>(it - names.begin());
}

bool strategy_less(const std::string& a, const std::string& b) {
  const std::size_t ra = strategy_rank(a), rb = strategy_rank(b);
  if (ra != rb) return ra < rb;
  return a < b;
}

template <typename T>
void add_unique(std::vector<T>& v, const T& value) {
  if (std::find(v.begin(), v.end(), value) == v.end()) v.push_back(value);
}

std::string pad(const std::string& s, std::size_t width, bool right) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

}  // namespace

std::optional<double> Summary::accuracy(const std::string& dataset, const std::string& model,
                                        const std::string& strategy, std::size_t client_count) const {
  for (const SummaryCell& c : cells)
    if (c.dataset == dataset && c.model == model && c.strategy == strategy && c.client_count == client_count)
      return c.accuracy;
  return std::nullopt;
}

Summary summarize(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw std::runtime_error("summarize: metrics contain no rows");
  Summary s;
  // (cell, seed) -> final-round row
  std::map<std::pair<CellTuple, std::uint64_t>, const MetricsRow*> finals;
  for (const MetricsRow& r : rows) {
    add_unique(s.datasets, r.dataset);
    add_unique(s.models, r.model);
    add_unique(s.strategies, r.strategy);
    add_unique(s.client_counts, r.client_count);
    const auto key = std::make_pair(CellTuple{r.dataset, r.model, r.strategy, r.client_count}, r.seed);
    auto [it, inserted] = finals.emplace(key, &r);
    if (!inserted && r.round > it->second->round) it->second = &r;
  }
  std::sort(s.models.begin(), s.models.end());
  std::sort(s.strategies.begin(), s.strategies.end(), strategy_less);
  std::sort(s.client_counts.begin(), s.client_counts.end());

  // finals is ordered by seed within a cell, so the sum order is fixed.
  std::map<CellTuple, std::pair<double, std::size_t>> sums;
  for (const auto& [key, row] : finals) {
    auto& acc = sums[key.first];
    acc.first += row->accuracy_value();
    acc.second += 1;
  }
  for (const std::string& d : s.datasets)
    for (const std::string& st : s.strategies)
      for (std::size_t k : s.client_counts)
        for (const std::string& m : s.models) {
          const auto it = sums.find(CellTuple{d, m, st, k});
          if (it == sums.end()) continue;
          s.cells.push_back({d, m, st, k, it->second.first / static_cast<double>(it->second.second),
                             it->second.second});
        }

  for (const std::string& m : s.models)
    for (const std::string& d : s.datasets)
      for (std::size_t k : s.client_counts) {
        ModelAggregate agg;
        agg.model = m;
        agg.dataset = d;
        agg.client_count = k;
        std::size_t n = 0;
        double total = 0.0;
        for (const std::string& st : s.strategies) {
          const auto a = s.accuracy(d, m, st, k);
          if (!a) continue;
          total += *a;
          if (n == 0 || *a > agg.best) {
            agg.best = *a;
            agg.best_strategy = st;
          }
          ++n;
        }
        if (n == 0) continue;
        agg.average = total / static_cast<double>(n);
        s.model_aggregates.push_back(agg);
      }
  return s;
}

std::string format_percent(double fraction) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, fraction * 100.0, std::chars_format::fixed, 2);
  if (ec != std::errc{}) throw std::runtime_error("format_percent failed");
  return std::string(buf, ptr);
}

namespace {

std::vector<std::vector<std::string>> summary_rows(const Summary& s) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> header = {"dataset", "strategy", "client_count"};
  header.insert(header.end(), s.models.begin(), s.models.end());
  out.push_back(header);
  for (const std::string& d : s.datasets)
    for (const std::string& st : s.strategies)
      for (std::size_t k : s.client_counts) {
        std::vector<std::string> row = {d, st, std::to_string(k)};
        bool any = false;
        for (const std::string& m : s.models) {
          const auto a = s.accuracy(d, m, st, k);
          row.push_back(a ? format_percent(*a) : "");
          any = any || a.has_value();
        }
        if (any) out.push_back(std::move(row));
      }
  return out;
}

std::string join_csv(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string summary_csv(const Summary& summary) { return join_csv(summary_rows(summary)); }

std::string summary_text(const Summary& summary) {
  const auto rows = summary_rows(summary);
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i) line += "  ";
      // Text columns left-aligned, numbers right-aligned.
      line += pad(rows[r][i], width[i], i >= 2);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
    }
  }
  return out;
}

std::string model_summary_csv(const Summary& summary) {
  std::vector<std::vector<std::string>> rows = {{"model", "dataset", "client_count", "average", "best", "best_strategy"}};
  for (const ModelAggregate& a : summary.model_aggregates)
    rows.push_back({a.model, a.dataset, std::to_string(a.client_count), format_percent(a.average),
                    format_percent(a.best), a.best_strategy});
  return join_csv(rows);
}

CurveMetric parse_curve_metric(const std::string& name) {
  if (name == "accuracy") return CurveMetric::accuracy;
  if (name == "loss") return CurveMetric::loss;
  if (name == "both") return CurveMetric::both;
  throw std::invalid_argument("unknown metric '" + name + "' (valid: accuracy, loss, both)");
}

namespace {

const std::vector<std::string>& selector_keys() {
  static const std::vector<std::string> keys = {"dataset", "model", "strategy", "client_count", "seed"};
  return keys;
}

std::string field(const MetricsRow& r, const std::string& key) {
  if (key == "dataset") return r.dataset;
  if (key == "model") return r.model;
  if (key == "strategy") return r.strategy;
  if (key == "client_count") return std::to_string(r.client_count);
  return std::to_string(r.seed);
}

}  // namespace

CurveSelector CurveSelector::parse(const std::string& text) {
  CurveSelector sel;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw std::invalid_argument("selector item '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const auto& keys = selector_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw std::invalid_argument("unknown selector key '" + key +
                                  "' (valid: dataset, model, strategy, client_count, seed)");
    if (!sel.filters.emplace(key, item.substr(eq + 1)).second)
      throw std::invalid_argument("selector key '" + key + "' given twice");
  }
  return sel;
}

bool CurveSelector::matches(const MetricsRow& row) const {
  for (const auto& [key, value] : filters)
    if (field(row, key) != value) return false;
  return true;
}

std::vector<CurvePoint> emit_curves(const std::vector<MetricsRow>& rows, const CurveSelector& selector,
                                    CurveMetric metric) {
  std::vector<const MetricsRow*> picked;
  for (const MetricsRow& r : rows)
    if (selector.matches(r)) picked.push_back(&r);
  if (picked.empty()) throw std::runtime_error("curves: selection matches no rows");

  std::vector<std::string> varying;
  for (const std::string& key : selector_keys()) {
    const std::string first = field(*picked.front(), key);
    for (const MetricsRow* r : picked)
      if (field(*r, key) != first) {
        varying.push_back(key);
        break;
      }
  }

  // Series in first-appearance order; rounds in file order within a series.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const MetricsRow*>> by_series;
  for (const MetricsRow* r : picked) {
    std::string name;
    for (const std::string& key : varying) {
      if (!name.empty()) name += ';';
      name += key + "=" + field(*r, key);
    }
    auto [it, inserted] = by_series.try_emplace(name);
    if (inserted) order.push_back(name);
    it->second.push_back(r);
  }

  std::vector<CurvePoint> points;
  auto label = [&](const std::string& base, const char* what) {
    if (metric != CurveMetric::both) return base.empty() ? std::string(what) : base;
    return base.empty() ? std::string(what) : base + ":" + what;
  };
  for (const std::string& name : order) {
    const auto& members = by_series[name];
    if (metric != CurveMetric::loss)
      for (const MetricsRow* r : members) points.push_back({r->round, label(name, "accuracy"), r->accuracy});
    if (metric != CurveMetric::accuracy)
      for (const MetricsRow* r : members) points.push_back({r->round, label(name, "loss"), r->loss});
  }
  return points;
}

std::string curves_csv(const std::vector<CurvePoint>& points) {
  std::string out = "round,series,value\n";
  for (const CurvePoint& p : points) out += std::to_string(p.round) + "," + p.series + "," + p.value + "\n";
  return out;
}

}  // namespace fkan
