#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace fkan {

/// Uniform B-spline grid: G interior intervals on [t_min, t_max], extended
/// by k knots on each side, giving G + 2k + 1 knots and G + k basis
/// functions of order k.
struct SplineGrid {
  int order = 3;
  int intervals = 5;
  double t_min = -1.0;
  double t_max = 1.0;
  std::vector<double> knots;

  static SplineGrid uniform(int order, int intervals, double t_min, double t_max);

  std::size_t basis_count() const { return static_cast<std::size_t>(intervals + order); }
  double spacing() const { return (t_max - t_min) / intervals; }
  /// Knot m for any integer m, including virtual knots beyond the stored span.
  double knot(long m) const { return t_min + static_cast<double>(m - order) * spacing(); }

  friend bool operator==(const SplineGrid&, const SplineGrid&) = default;
};

/// All G + k order-k basis values at x by the Cox-de Boor recursion over
/// the full knot vector. Inside [t_min, t_max] the values are non-negative
/// and sum to 1; x == t_max is assigned to the last interior interval.
/// Outside the interior, only the extension bases contribute, so the sum
/// falls below 1; beyond the extended knot span every value is 0.
std::vector<double> bspline_basis(double x, const SplineGrid& grid);

/// Basis values plus d/dx of each basis function.
void bspline_basis_with_derivative(double x, const SplineGrid& grid, std::vector<double>& values,
                                   std::vector<double>& derivatives);

inline constexpr int kMaxSplineOrder = 7;

/// The at most k + 1 non-zero basis values at x. Basis index first + q
/// holds values[q]; indices outside [0, G + k) are to be ignored. When x
/// lies outside the extended knot span, `supported` is false.
struct LocalBasis {
  long first = 0;
  bool supported = false;
  std::array<double, kMaxSplineOrder + 1> values{};
  std::array<double, kMaxSplineOrder + 1> derivatives{};
};

/// Local (de Boor triangle) evaluation exploiting uniform spacing.
LocalBasis local_bspline_basis(double x, const SplineGrid& grid);

}  // namespace fkan
