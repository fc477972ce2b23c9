#pragma once

#include <cstdint>
#include <string>

#include "fkan/model.hpp"

namespace fkan {

struct GradCheckOptions {
  std::size_t batch = 16;
  double step = 1e-5;
  /// Entries with |finite difference| at or below this are not compared.
  double min_magnitude = 1e-7;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  std::size_t compared = 0;
  std::size_t skipped = 0;
  double max_relative_error = 0.0;
  /// "kan.1.spline_coeffs[37]" for the worst entry.
  std::string worst;
  bool passed = false;
};

/// Compares Model::backward against central differences of the batch loss
/// on a random batch (standard normal features, uniform labels). Relative
/// error is |analytic - fd| / max(|analytic|, |fd|).
GradCheckReport gradient_check(const Architecture& arch, const GradCheckOptions& options = {});

}  // namespace fkan
