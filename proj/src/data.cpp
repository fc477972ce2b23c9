#include "fkan/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <boost/algorithm/string/case_conv.hpp>
#include <boost/algorithm/string/trim.hpp>

#include "fkan/rng.hpp"

namespace fkan {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.class_count = class_count;
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.features = Matrix(indices.size(), features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t src = indices[r];
    if (src >= size()) throw std::out_of_range("Dataset::subset: index out of range");
    std::copy(features.row(src).begin(), features.row(src).end(), out.features.row(r).begin());
    out.labels.push_back(labels[src]);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> h(class_count, 0);
  for (int y : labels) ++h[static_cast<std::size_t>(y)];
  return h;
}

namespace {

bool is_missing(const std::string& field) {
  if (field.empty()) return true;
  const std::string lower = boost::algorithm::to_lower_copy(field);
  return lower == "na" || lower == "nan" || lower == "null" || lower == "?" || lower == "n/a";
}

// RFC 4180 fields: quotes group delimiters and "" inside quotes is a literal quote.
std::vector<std::string> split_line(const std::string& line, char delimiter, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch != '"') fields.back() += ch;
      else if (i + 1 < line.size() && line[i + 1] == '"') fields.back() += line[++i];
      else quoted = false;
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delimiter) {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  if (quoted) throw std::runtime_error("load_csv: line " + std::to_string(line_no) + ": unterminated quoted field");
  for (auto& f : fields) boost::algorithm::trim(f);
  return fields;
}

enum class ColumnRole { numeric, categorical, label, dropped };

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path.string());
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line, schema.delimiter, 1);

  std::vector<ColumnRole> roles(header.size(), ColumnRole::numeric);
  auto find_column = [&](const std::string& name, const char* what) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error(std::string("load_csv: missing ") + what + " column '" + name + "' in " + path.string());
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = find_column(schema.label_column, "label");
  roles[label_col] = ColumnRole::label;
  for (const auto& c : schema.categorical_columns) roles[find_column(c, "categorical")] = ColumnRole::categorical;
  for (const auto& c : schema.drop_columns) roles[find_column(c, "dropped")] = ColumnRole::dropped;

  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line, schema.delimiter, line_no);
    if (fields.size() != header.size()) {
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, header has " +
                               std::to_string(header.size()));
    }
    bool missing = false;
    for (std::size_t c = 0; c < fields.size(); ++c)
      if (roles[c] != ColumnRole::dropped && is_missing(fields[c])) missing = true;
    if (missing) continue;
    // Validate numeric columns now so the error can name the line.
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (roles[c] != ColumnRole::numeric) continue;
      double v;
      const auto& f = fields[c];
      const char* first = f.data() + (f.front() == '+' ? 1 : 0);
      auto [ptr, ec] = std::from_chars(first, f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw std::runtime_error("load_csv: non-numeric value '" + f + "' in numeric column '" +
                                 header[c] + "' at line " + std::to_string(line_no));
      }
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw std::runtime_error("load_csv: no complete data rows in " + path.string());

  // Category levels in first-appearance order.
  std::vector<std::vector<std::string>> levels(header.size());
  for (const auto& r : rows)
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (roles[c] != ColumnRole::categorical && roles[c] != ColumnRole::label) continue;
      auto& lv = levels[c];
      if (std::find(lv.begin(), lv.end(), r[c]) == lv.end()) lv.push_back(r[c]);
    }

  Dataset d;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (roles[c] == ColumnRole::numeric) d.feature_names.push_back(header[c]);
    if (roles[c] == ColumnRole::categorical)
      for (const auto& v : levels[c]) d.feature_names.push_back(header[c] + "=" + v);
  }
  d.class_names = levels[label_col];
  d.class_count = d.class_names.size();
  d.features = Matrix(rows.size(), d.feature_names.size());
  d.labels.reserve(rows.size());
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& r = rows[n];
    std::size_t out = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      switch (roles[c]) {
        case ColumnRole::numeric: {
          double v = 0.0;
          const char* first = r[c].data() + (r[c].front() == '+' ? 1 : 0);
          std::from_chars(first, r[c].data() + r[c].size(), v);
          d.features(n, out++) = v;
          break;
        }
        case ColumnRole::categorical: {
          const auto& lv = levels[c];
          const auto pos = static_cast<std::size_t>(std::find(lv.begin(), lv.end(), r[c]) - lv.begin());
          d.features(n, out + pos) = 1.0;
          out += lv.size();
          break;
        }
        case ColumnRole::label: {
          const auto& lv = levels[c];
          d.labels.push_back(static_cast<int>(std::find(lv.begin(), lv.end(), r[c]) - lv.begin()));
          break;
        }
        case ColumnRole::dropped:
          break;
      }
    }
  }
  return d;
}

Split train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 0.5))
    throw std::invalid_argument("train_test_split: test_fraction must lie in (0, 0.5)");
  std::vector<std::vector<std::size_t>> by_class(data.class_count);
  for (std::size_t n = 0; n < data.size(); ++n) by_class[static_cast<std::size_t>(data.labels[n])].push_back(n);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.size() < 2) {
      throw std::invalid_argument("train_test_split: class '" +
                                  (c < data.class_names.size() ? data.class_names[c] : std::to_string(c)) +
                                  "' has fewer than 2 samples");
    }
    Rng rng(derive_seed({seed, c, 0x5b17ULL}));
    rng.shuffle(idx);
    const double want = std::round(test_fraction * static_cast<double>(idx.size()));
    const std::size_t n_test = std::clamp<std::size_t>(static_cast<std::size_t>(want), 1, idx.size() - 1);
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + static_cast<long>(n_test));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<long>(n_test), idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {data.subset(train_idx), data.subset(test_idx)};
}

Normalizer Normalizer::fit(const Matrix& features) {
  if (features.rows() == 0) throw std::invalid_argument("Normalizer::fit: no samples");
  Normalizer z;
  const std::size_t n = features.rows(), f = features.cols();
  z.mean.assign(f, 0.0);
  z.stddev.assign(f, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) z.mean[c] += features(r, c);
  for (double& m : z.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      const double d = features(r, c) - z.mean[c];
      z.stddev[c] += d * d;
    }
  for (double& s : z.stddev) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 1e-12)) s = 1.0;
  }
  return z;
}

Matrix Normalizer::apply(const Matrix& features) const {
  if (features.cols() != mean.size()) throw std::invalid_argument("Normalizer::apply: feature count mismatch");
  Matrix out(features.rows(), features.cols());
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t c = 0; c < features.cols(); ++c) out(r, c) = (features(r, c) - mean[c]) / stddev[c];
  return out;
}

Split prepare_split(const Dataset& raw, double test_fraction, std::uint64_t seed) {
  Split s = train_test_split(raw, test_fraction, seed);
  const auto hist = s.train.class_histogram();
  for (std::size_t c = 0; c < hist.size(); ++c)
    if (hist[c] == 0) throw std::invalid_argument("prepare_split: class " + std::to_string(c) + " present only in test split");
  const Normalizer z = Normalizer::fit(s.train.features);
  s.train.features = z.apply(s.train.features);
  s.test.features = z.apply(s.test.features);
  return s;
}

namespace {

// Largest-remainder rounding of weights * total to integers summing to total.
std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total) {
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] * static_cast<double>(total);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++out[remainders[r % remainders.size()].second];
  return out;
}

std::size_t largest(const std::vector<std::size_t>& sizes) {
  return static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
}

}  // namespace

std::vector<ClientShard> partition_uneven(const Dataset& train, std::size_t clients, std::uint64_t seed,
                                          std::size_t min_size) {
  const std::size_t n = train.size();
  if (clients == 0) throw std::invalid_argument("partition_uneven: need at least one client");
  if (clients > n) {
    throw std::invalid_argument("partition_uneven: " + std::to_string(clients) + " clients for " +
                                std::to_string(n) + " samples");
  }
  Rng rng(derive_seed({seed, 0xe7e2ULL}));
  const auto weights = rng.dirichlet(std::vector<double>(clients, 10.0));
  std::vector<std::size_t> sizes = apportion(weights, n);
  const std::size_t floor_size = std::min(std::max<std::size_t>(1, min_size), n / clients);
  for (std::size_t i = 0; i < clients; ++i) {
    while (sizes[i] < floor_size) {
      --sizes[largest(sizes)];
      ++sizes[i];
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<ClientShard> shards(clients);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < clients; ++i) {
    shards[i].client_id = i;
    shards[i].indices.assign(order.begin() + static_cast<long>(offset),
                             order.begin() + static_cast<long>(offset + sizes[i]));
    offset += sizes[i];
  }
  return shards;
}

std::vector<ClientShard> partition_dirichlet(const Dataset& train, std::size_t clients, double alpha,
                                             std::uint64_t seed) {
  if (!(alpha > 0.0)) throw std::invalid_argument("partition_dirichlet: alpha must be positive");
  if (clients == 0) throw std::invalid_argument("partition_dirichlet: need at least one client");
  if (clients > train.size()) throw std::invalid_argument("partition_dirichlet: more clients than samples");
  std::vector<std::vector<std::size_t>> by_class(train.class_count);
  for (std::size_t n = 0; n < train.size(); ++n) by_class[static_cast<std::size_t>(train.labels[n])].push_back(n);

  std::vector<ClientShard> shards(clients);
  for (std::size_t i = 0; i < clients; ++i) shards[i].client_id = i;
  Rng rng(derive_seed({seed, 0xd1e1ULL}));
  for (auto& idx : by_class) {
    rng.shuffle(idx);
    const auto p = rng.dirichlet(std::vector<double>(clients, alpha));
    double cumulative = 0.0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < clients; ++i) {
      cumulative += p[i];
      std::size_t stop = i + 1 == clients
                             ? idx.size()
                             : std::min(idx.size(), static_cast<std::size_t>(std::round(cumulative * static_cast<double>(idx.size()))));
      stop = std::max(stop, start);
      shards[i].indices.insert(shards[i].indices.end(), idx.begin() + static_cast<long>(start),
                               idx.begin() + static_cast<long>(stop));
      start = stop;
    }
  }
  for (auto& s : shards) std::sort(s.indices.begin(), s.indices.end());
  for (std::size_t i = 0; i < clients; ++i) {
    while (shards[i].indices.empty()) {
      std::size_t donor = 0;
      for (std::size_t j = 1; j < clients; ++j)
        if (shards[j].indices.size() > shards[donor].indices.size()) donor = j;
      shards[i].indices.push_back(shards[donor].indices.back());
      shards[donor].indices.pop_back();
    }
  }
  return shards;
}

void validate_partition(const std::vector<ClientShard>& shards, std::size_t sample_count) {
  std::vector<char> seen(sample_count, 0);
  std::size_t total = 0;
  for (const auto& s : shards) {
    if (s.indices.empty()) throw std::logic_error("partition: client " + std::to_string(s.client_id) + " is empty");
    for (std::size_t i : s.indices) {
      if (i >= sample_count) throw std::logic_error("partition: index out of range");
      if (seen[i]) throw std::logic_error("partition: sample " + std::to_string(i) + " assigned twice");
      seen[i] = 1;
      ++total;
    }
  }
  if (total != sample_count) throw std::logic_error("partition: shards do not cover the training set");
}

void SyntheticSpec::validate() const {
  if (n_samples == 0 || n_features == 0) throw std::invalid_argument("SyntheticSpec: empty shape");
  if (class_count < 2) throw std::invalid_argument("SyntheticSpec: need at least two classes");
  if (!(cluster_separation > 0.0)) throw std::invalid_argument("SyntheticSpec: separation must be positive");
  if (!(label_noise >= 0.0 && label_noise < 0.5)) throw std::invalid_argument("SyntheticSpec: label_noise must lie in [0, 0.5)");
}

Dataset synth_generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(derive_seed({spec.seed, 0x5e7bULL}));
  const std::size_t c_count = spec.class_count, f = spec.n_features;
  // Scaled unit vectors: |e_a - e_b| * s / sqrt(2) = s.
  const double radius = spec.cluster_separation / std::sqrt(2.0);
  Matrix centers(c_count, f);
  for (std::size_t c = 0; c < c_count; ++c) {
    if (c < f) {
      centers(c, c) = radius;
    } else {
      double norm = 0.0;
      for (std::size_t j = 0; j < f; ++j) {
        centers(c, j) = rng.normal();
        norm += centers(c, j) * centers(c, j);
      }
      for (std::size_t j = 0; j < f; ++j) centers(c, j) *= radius / std::sqrt(norm);
    }
  }
  std::vector<std::size_t> order(spec.n_samples);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  Dataset d;
  d.class_count = c_count;
  for (std::size_t j = 0; j < f; ++j) d.feature_names.push_back("x" + std::to_string(j));
  for (std::size_t c = 0; c < c_count; ++c) d.class_names.push_back("c" + std::to_string(c));
  d.features = Matrix(spec.n_samples, f);
  d.labels.resize(spec.n_samples);
  for (std::size_t n = 0; n < spec.n_samples; ++n) {
    const std::size_t c = order[n] % c_count;
    d.labels[n] = static_cast<int>(c);
    for (std::size_t j = 0; j < f; ++j) d.features(n, j) = centers(c, j) + rng.normal();
  }
  const auto flips = static_cast<std::size_t>(std::round(spec.label_noise * static_cast<double>(spec.n_samples)));
  std::vector<std::size_t> victims(spec.n_samples);
  std::iota(victims.begin(), victims.end(), 0);
  rng.shuffle(victims);
  for (std::size_t v = 0; v < flips; ++v) {
    const std::size_t n = victims[v];
    const std::size_t shift = 1 + rng.index(c_count - 1);
    d.labels[n] = static_cast<int>((static_cast<std::size_t>(d.labels[n]) + shift) % c_count);
  }
  return d;
}

}  // namespace fkan
