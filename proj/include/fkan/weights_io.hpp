#pragma once

#include <filesystem>
#include <string>

#include "fkan/model.hpp"
#include "fkan/tensor.hpp"

namespace fkan {

/// Weight file contents: the architecture needed to rebuild the model and
/// every ParamSet entry as {name, rows, cols, row-major values}.
struct WeightFile {
  Architecture architecture;
  ParamSet params;
};

/// JSON text:
///   {"format": "fkan-weights", "version": 1,
///    "architecture": {"kind", "widths", "spline_order", "grid_intervals",
///                     "grid_min", "grid_max", "input_clip"},
///    "entries": [{"name", "rows", "cols", "values"}, ...]}
/// Doubles are written in shortest round-trip form, so save/load is exact.
std::string weights_to_json(const Architecture& arch, const ParamSet& params);
WeightFile weights_from_json(const std::string& text);

void save_weights(const std::filesystem::path& path, const Architecture& arch, const ParamSet& params);
/// Throws std::runtime_error on malformed files or entries that do not fit
/// the declared architecture.
WeightFile load_weights(const std::filesystem::path& path);

/// Rebuilds a model from a weight file.
Model model_from_weights(const WeightFile& file);

}  // namespace fkan
