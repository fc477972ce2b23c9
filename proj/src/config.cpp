#include "fkan/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fkan {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const char* type_name(const json& v) { return v.type_name(); }

/// Object view that remembers which keys were read so leftovers can be
/// reported as unknown.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) fail(path_, std::string("expected an object, got ") + type_name(value_));
  }

  const std::string& path() const { return path_; }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = value_.find(key);
    return it == value_.end() ? nullptr : &*it;
  }
  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) fail(child(key), "required key missing");
    return *v;
  }

  void reject_unknown() const {
    for (auto it = value_.begin(); it != value_.end(); ++it)
      if (!seen_.count(it.key())) fail(child(it.key()), "unknown key");
  }

 private:
  const json& value_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, std::string("expected a string, got ") + type_name(v));
  return v.get<std::string>();
}

std::uint64_t as_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    fail(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

double as_real(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, std::string("expected a number, got ") + type_name(v));
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, std::string("expected true or false, got ") + type_name(v));
  return v.get<bool>();
}

const json& as_array(const json& v, const std::string& path, bool non_empty) {
  if (!v.is_array()) fail(path, std::string("expected an array, got ") + type_name(v));
  if (non_empty && v.empty()) fail(path, "must not be empty");
  return v;
}

std::vector<std::string> string_list(const json& v, const std::string& path) {
  std::vector<std::string> out;
  const json& arr = as_array(v, path, false);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_string(arr[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

template <typename Fn>
void optional_field(Node& node, const std::string& key, Fn&& apply) {
  if (const json* v = node.find(key)) apply(*v, node.child(key));
}

std::string item_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

SyntheticSpec parse_synthetic(const json& v, const std::string& path) {
  Node n(v, path);
  SyntheticSpec s;
  optional_field(n, "n_samples", [&](const json& x, const std::string& p) { s.n_samples = as_count(x, p); });
  optional_field(n, "n_features", [&](const json& x, const std::string& p) { s.n_features = as_count(x, p); });
  optional_field(n, "class_count", [&](const json& x, const std::string& p) { s.class_count = as_count(x, p); });
  optional_field(n, "cluster_separation",
                 [&](const json& x, const std::string& p) { s.cluster_separation = as_real(x, p); });
  optional_field(n, "label_noise", [&](const json& x, const std::string& p) { s.label_noise = as_real(x, p); });
  optional_field(n, "seed", [&](const json& x, const std::string& p) { s.seed = as_count(x, p); });
  n.reject_unknown();
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return s;
}

std::filesystem::path resolve_data_path(const std::string& raw, const std::filesystem::path& base_dir) {
  std::filesystem::path p(raw);
  if (p.is_absolute()) return p;
  if (const char* dir = std::getenv("FKAN_DATA_DIR"); dir && *dir) return std::filesystem::path(dir) / p;
  return base_dir / p;
}

DatasetSource parse_dataset(const json& v, const std::string& path, const std::filesystem::path& base_dir) {
  Node n(v, path);
  DatasetSource d;
  d.name = as_string(n.require("name"), n.child("name"));
  if (!valid_name(d.name)) fail(n.child("name"), "use letters, digits, '_', '-' or '.'");
  const json* synth = n.find("synthetic");
  const json* csv = n.find("csv");
  if ((synth != nullptr) == (csv != nullptr)) fail(path, "exactly one of 'synthetic' or 'csv' is required");
  if (synth) d.synthetic = parse_synthetic(*synth, n.child("synthetic"));
  if (csv) {
    Node c(*csv, n.child("csv"));
    d.csv_path = resolve_data_path(as_string(c.require("path"), c.child("path")), base_dir);
    d.schema.label_column = as_string(c.require("label_column"), c.child("label_column"));
    optional_field(c, "categorical_columns",
                   [&](const json& x, const std::string& p) { d.schema.categorical_columns = string_list(x, p); });
    optional_field(c, "drop_columns",
                   [&](const json& x, const std::string& p) { d.schema.drop_columns = string_list(x, p); });
    optional_field(c, "delimiter", [&](const json& x, const std::string& p) {
      const std::string s = as_string(x, p);
      if (s.size() != 1) fail(p, "delimiter must be a single character");
      d.schema.delimiter = s[0];
    });
    c.reject_unknown();
  }
  optional_field(n, "split_seed", [&](const json& x, const std::string& p) { d.split_seed = as_count(x, p); });
  n.reject_unknown();
  return d;
}

StrategyConfig parse_strategy_entry(const json& v, const std::string& path, std::string& label) {
  StrategyConfig s;
  auto parse_name = [&](const json& x, const std::string& p) {
    try {
      s.kind = parse_strategy(as_string(x, p));
    } catch (const std::invalid_argument& e) {
      fail(p, e.what());
    }
  };
  if (v.is_string()) {
    parse_name(v, path);
    label = s.label();
  } else {
    Node n(v, path);
    parse_name(n.require("name"), n.child("name"));
    label = s.label();
    optional_field(n, "label", [&](const json& x, const std::string& p) {
      label = as_string(x, p);
      if (!valid_name(label)) fail(p, "use letters, digits, '_', '-' or '.'");
    });
    optional_field(n, "trim_fraction", [&](const json& x, const std::string& p) { s.trim_fraction = as_real(x, p); });
    optional_field(n, "momentum_mu", [&](const json& x, const std::string& p) { s.momentum_mu = as_real(x, p); });
    optional_field(n, "krum_f", [&](const json& x, const std::string& p) { s.krum_f = as_count(x, p); });
    optional_field(n, "fedprox_mu", [&](const json& x, const std::string& p) { s.fedprox_mu = as_real(x, p); });
    optional_field(n, "sample_weighted",
                   [&](const json& x, const std::string& p) { s.sample_weighted = as_bool(x, p); });
    n.reject_unknown();
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return s;
}

TrainingDefaults parse_defaults(const json& v, const std::string& path) {
  Node n(v, path);
  TrainingDefaults d;
  optional_field(n, "local_epochs", [&](const json& x, const std::string& p) {
    d.local_epochs = as_count(x, p);
    if (d.local_epochs < 1) fail(p, "must be >= 1");
  });
  optional_field(n, "batch_size", [&](const json& x, const std::string& p) {
    d.batch_size = as_count(x, p);
    if (d.batch_size < 1) fail(p, "must be >= 1");
  });
  optional_field(n, "lr", [&](const json& x, const std::string& p) {
    d.lr = as_real(x, p);
    if (!(d.lr > 0.0)) fail(p, "must be positive");
  });
  optional_field(n, "kan_rounds", [&](const json& x, const std::string& p) {
    d.kan_rounds = as_count(x, p);
    if (d.kan_rounds < 1) fail(p, "must be >= 1");
  });
  optional_field(n, "mlp_rounds", [&](const json& x, const std::string& p) {
    d.mlp_rounds = as_count(x, p);
    if (d.mlp_rounds < 1) fail(p, "must be >= 1");
  });
  optional_field(n, "hidden", [&](const json& x, const std::string& p) {
    d.hidden.clear();
    const json& arr = as_array(x, p, false);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      d.hidden.push_back(as_count(arr[i], item_path(p, i)));
      if (d.hidden.back() == 0) fail(item_path(p, i), "must be positive");
    }
  });
  optional_field(n, "persist_optimizer_state",
                 [&](const json& x, const std::string& p) { d.persist_optimizer_state = as_bool(x, p); });
  n.reject_unknown();
  return d;
}

Override parse_override(const json& v, const std::string& path) {
  Node n(v, path);
  Override o;
  Node m(n.require("match"), n.child("match"));
  optional_field(m, "dataset", [&](const json& x, const std::string& p) { o.dataset = as_string(x, p); });
  optional_field(m, "model", [&](const json& x, const std::string& p) {
    try {
      o.model = parse_model_kind(as_string(x, p));
    } catch (const std::invalid_argument& e) {
      fail(p, e.what());
    }
  });
  optional_field(m, "strategy", [&](const json& x, const std::string& p) { o.strategy = as_string(x, p); });
  optional_field(m, "client_count", [&](const json& x, const std::string& p) { o.client_count = as_count(x, p); });
  optional_field(m, "seed", [&](const json& x, const std::string& p) { o.seed = as_count(x, p); });
  m.reject_unknown();

  Node s(n.require("set"), n.child("set"));
  auto positive = [](std::size_t value, const std::string& p) {
    if (value < 1) fail(p, "must be >= 1");
    return value;
  };
  optional_field(s, "num_rounds",
                 [&](const json& x, const std::string& p) { o.num_rounds = positive(as_count(x, p), p); });
  optional_field(s, "local_epochs",
                 [&](const json& x, const std::string& p) { o.local_epochs = positive(as_count(x, p), p); });
  optional_field(s, "batch_size",
                 [&](const json& x, const std::string& p) { o.batch_size = positive(as_count(x, p), p); });
  optional_field(s, "lr", [&](const json& x, const std::string& p) {
    o.lr = as_real(x, p);
    if (!(*o.lr > 0.0)) fail(p, "must be positive");
  });
  optional_field(s, "persist_optimizer_state",
                 [&](const json& x, const std::string& p) { o.persist_optimizer_state = as_bool(x, p); });
  s.reject_unknown();
  n.reject_unknown();
  return o;
}

}  // namespace

std::string CellKey::to_string() const {
  return dataset + "/" + fkan::to_string(model) + "/" + strategy + "/K=" + std::to_string(client_count) +
         "/seed=" + std::to_string(seed);
}

bool Override::matches(const CellKey& key) const {
  return (!dataset || *dataset == key.dataset) && (!model || *model == key.model) &&
         (!strategy || *strategy == key.strategy) && (!client_count || *client_count == key.client_count) &&
         (!seed || *seed == key.seed);
}

std::size_t ExperimentGrid::cell_count() const {
  return datasets.size() * models.size() * strategies.size() * client_counts.size() * seeds.size();
}

std::vector<Cell> ExperimentGrid::cells() const {
  std::vector<Cell> out;
  out.reserve(cell_count());
  for (std::size_t d = 0; d < datasets.size(); ++d)
    for (ModelKind model : models)
      for (std::size_t s = 0; s < strategies.size(); ++s)
        for (std::size_t k : client_counts)
          for (std::uint64_t seed : seeds) {
            Cell cell;
            cell.key = {datasets[d].name, model, strategy_labels[s], k, seed};
            cell.dataset_index = d;
            FederationConfig& f = cell.federation;
            f.model_kind = model;
            f.num_rounds = model == ModelKind::kan ? defaults.kan_rounds : defaults.mlp_rounds;
            f.local_epochs = defaults.local_epochs;
            f.batch_size = defaults.batch_size;
            f.lr = defaults.lr;
            f.hidden = defaults.hidden;
            f.persist_optimizer_state = defaults.persist_optimizer_state;
            f.strategy = strategies[s];
            f.seed = seed;
            for (const Override& o : overrides) {
              if (!o.matches(cell.key)) continue;
              if (o.num_rounds) f.num_rounds = *o.num_rounds;
              if (o.local_epochs) f.local_epochs = *o.local_epochs;
              if (o.batch_size) f.batch_size = *o.batch_size;
              if (o.lr) f.lr = *o.lr;
              if (o.persist_optimizer_state) f.persist_optimizer_state = *o.persist_optimizer_state;
            }
            out.push_back(std::move(cell));
          }
  return out;
}

ExperimentGrid parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Node root(doc, "");
  ExperimentGrid g;

  if (const json* v = root.find("version"); v && as_count(*v, "version") != 1)
    fail("version", "unsupported config version (expected 1)");

  {
    const json& arr = as_array(root.require("datasets"), "datasets", true);
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      g.datasets.push_back(parse_dataset(arr[i], item_path("datasets", i), base_dir));
      if (!names.insert(g.datasets.back().name).second)
        fail(item_path("datasets", i) + ".name", "duplicate dataset name '" + g.datasets.back().name + "'");
    }
  }
  {
    const json& arr = as_array(root.require("models"), "models", true);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = item_path("models", i);
      try {
        g.models.push_back(parse_model_kind(as_string(arr[i], p)));
      } catch (const std::invalid_argument& e) {
        fail(p, e.what());
      }
      for (std::size_t j = 0; j + 1 < g.models.size(); ++j)
        if (g.models[j] == g.models.back()) fail(p, "duplicate model");
    }
  }
  {
    const json& arr = as_array(root.require("strategies"), "strategies", true);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      std::string label;
      g.strategies.push_back(parse_strategy_entry(arr[i], item_path("strategies", i), label));
      for (const auto& existing : g.strategy_labels)
        if (existing == label)
          fail(item_path("strategies", i), "duplicate strategy label '" + label + "' (set a distinct 'label')");
      g.strategy_labels.push_back(label);
    }
  }
  if (const json* v = root.find("client_counts")) {
    g.client_counts.clear();
    const json& arr = as_array(*v, "client_counts", true);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::size_t k = as_count(arr[i], item_path("client_counts", i));
      if (k < 1) fail(item_path("client_counts", i), "must be >= 1");
      for (std::size_t existing : g.client_counts)
        if (existing == k) fail(item_path("client_counts", i), "duplicate client count");
      g.client_counts.push_back(k);
    }
  }
  if (const json* v = root.find("seeds")) {
    g.seeds.clear();
    const json& arr = as_array(*v, "seeds", true);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      g.seeds.push_back(as_count(arr[i], item_path("seeds", i)));
      for (std::size_t j = 0; j + 1 < g.seeds.size(); ++j)
        if (g.seeds[j] == g.seeds.back()) fail(item_path("seeds", i), "duplicate seed");
    }
  }
  if (const json* v = root.find("partition")) {
    Node n(*v, "partition");
    const std::string kind = as_string(n.require("kind"), "partition.kind");
    if (kind == "uneven") {
      g.partition.kind = PartitionKind::uneven;
    } else if (kind == "dirichlet") {
      g.partition.kind = PartitionKind::dirichlet;
    } else {
      fail("partition.kind", "unknown partition '" + kind + "' (valid: uneven, dirichlet)");
    }
    optional_field(n, "alpha", [&](const json& x, const std::string& p) {
      g.partition.alpha = as_real(x, p);
      if (!(g.partition.alpha > 0.0)) fail(p, "must be positive");
    });
    optional_field(n, "min_size", [&](const json& x, const std::string& p) { g.partition.min_size = as_count(x, p); });
    n.reject_unknown();
  }
  if (const json* v = root.find("test_fraction")) {
    g.test_fraction = as_real(*v, "test_fraction");
    if (!(g.test_fraction > 0.0 && g.test_fraction < 0.5)) fail("test_fraction", "must lie in (0, 0.5)");
  }
  if (const json* v = root.find("defaults")) g.defaults = parse_defaults(*v, "defaults");
  if (const json* v = root.find("overrides")) {
    const json& arr = as_array(*v, "overrides", false);
    for (std::size_t i = 0; i < arr.size(); ++i) g.overrides.push_back(parse_override(arr[i], item_path("overrides", i)));
  }
  root.reject_unknown();

  // Krum needs K >= f + 3 for every client count it will see.
  for (std::size_t s = 0; s < g.strategies.size(); ++s) {
    const StrategyConfig& sc = g.strategies[s];
    if (sc.kind != StrategyKind::krum || !sc.krum_f) continue;
    for (std::size_t k : g.client_counts)
      if (k < *sc.krum_f + 3)
        fail(item_path("strategies", s) + ".krum_f",
             "f = " + std::to_string(*sc.krum_f) + " needs at least " + std::to_string(*sc.krum_f + 3) +
                 " clients, but client_counts contains " + std::to_string(k));
  }
  return g;
}

ExperimentGrid load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace fkan
