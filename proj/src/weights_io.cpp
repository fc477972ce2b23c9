#include "fkan/weights_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fkan {

namespace {

constexpr const char* kFormat = "fkan-weights";
constexpr int kVersion = 1;

[[noreturn]] void malformed(const std::string& what) {
  throw std::runtime_error("weights file: " + what);
}

}  // namespace

std::string weights_to_json(const Architecture& arch, const ParamSet& params) {
  nlohmann::ordered_json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["architecture"] = {
      {"kind", to_string(arch.kind)},
      {"widths", arch.widths},
      {"spline_order", arch.grid.order},
      {"grid_intervals", arch.grid.intervals},
      {"grid_min", arch.grid.t_min},
      {"grid_max", arch.grid.t_max},
      {"input_clip", arch.input_clip},
  };
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : params.entries()) {
    entries.push_back({{"name", e.name},
                       {"rows", e.tensor.rows()},
                       {"cols", e.tensor.cols()},
                       {"values", e.tensor.data()}});
  }
  doc["entries"] = std::move(entries);
  return doc.dump(1) + "\n";
}

WeightFile weights_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) malformed("unexpected format tag");
    if (doc.at("version").get<int>() != kVersion) malformed("unsupported version");
    const auto& a = doc.at("architecture");
    WeightFile file;
    file.architecture.kind = parse_model_kind(a.at("kind").get<std::string>());
    file.architecture.widths = a.at("widths").get<std::vector<std::size_t>>();
    file.architecture.grid = SplineGrid::uniform(a.at("spline_order").get<int>(), a.at("grid_intervals").get<int>(),
                                                 a.at("grid_min").get<double>(), a.at("grid_max").get<double>());
    file.architecture.input_clip = a.at("input_clip").get<double>();
    file.architecture.validate();

    const ParamSet expected = Model::zeros(file.architecture).params();
    const auto& entries = doc.at("entries");
    if (!entries.is_array() || entries.size() != expected.entry_count())
      malformed("entry count does not match the architecture");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const std::string name = e.at("name").get<std::string>();
      const auto rows = e.at("rows").get<std::size_t>();
      const auto cols = e.at("cols").get<std::size_t>();
      auto values = e.at("values").get<std::vector<double>>();
      const Matrix& want = expected.tensor(i);
      if (name != expected.entry(i).name || rows != want.rows() || cols != want.cols())
        malformed("entry '" + name + "' does not match the architecture");
      if (values.size() != rows * cols) malformed("entry '" + name + "' has the wrong value count");
      file.params.add(name, Matrix(rows, cols, std::move(values)));
    }
    return file;
  } catch (const nlohmann::json::exception& e) {
    malformed(e.what());
  } catch (const std::invalid_argument& e) {
    malformed(e.what());
  }
}

void save_weights(const std::filesystem::path& path, const Architecture& arch, const ParamSet& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << weights_to_json(arch, params);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

WeightFile load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return weights_from_json(buf.str());
}

Model model_from_weights(const WeightFile& file) {
  Model m = Model::zeros(file.architecture);
  m.assign_params(file.params);
  return m;
}

}  // namespace fkan
