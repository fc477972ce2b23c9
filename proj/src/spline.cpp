#include "fkan/spline.hpp"

#include <cmath>
#include <stdexcept>

namespace fkan {

SplineGrid SplineGrid::uniform(int order, int intervals, double t_min, double t_max) {
  if (order < 0 || order > kMaxSplineOrder) throw std::invalid_argument("SplineGrid: unsupported order");
  if (intervals < 1) throw std::invalid_argument("SplineGrid: need at least one interval");
  if (!(t_max > t_min)) throw std::invalid_argument("SplineGrid: empty domain");
  SplineGrid g;
  g.order = order;
  g.intervals = intervals;
  g.t_min = t_min;
  g.t_max = t_max;
  const long n = intervals + 2 * order + 1;
  g.knots.resize(static_cast<std::size_t>(n));
  for (long m = 0; m < n; ++m) g.knots[static_cast<std::size_t>(m)] = g.knot(m);
  return g;
}

namespace {

// Order-0 indicator vector plus all intermediate orders up to `upto`.
std::vector<double> cox_de_boor(double x, const SplineGrid& grid, int upto,
                                std::vector<double>* previous_order) {
  const auto& t = grid.knots;
  const std::size_t n_knots = t.size();
  std::vector<double> cur(n_knots - 1, 0.0);
  const std::size_t last_interior = grid.basis_count() - 1;  // interval [t_{G+k-1}, t_{G+k})
  if (x == grid.t_max) {
    cur[last_interior] = 1.0;
  } else {
    for (std::size_t j = 0; j + 1 < n_knots; ++j)
      if (t[j] <= x && x < t[j + 1]) cur[j] = 1.0;
  }
  for (int p = 1; p <= upto; ++p) {
    if (p == upto && previous_order) *previous_order = cur;
    std::vector<double> next(n_knots - 1 - static_cast<std::size_t>(p), 0.0);
    for (std::size_t j = 0; j < next.size(); ++j) {
      const double left = (x - t[j]) / (t[j + p] - t[j]) * cur[j];
      const double right = (t[j + p + 1] - x) / (t[j + p + 1] - t[j + 1]) * cur[j + 1];
      next[j] = left + right;
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

std::vector<double> bspline_basis(double x, const SplineGrid& grid) {
  return cox_de_boor(x, grid, grid.order, nullptr);
}

void bspline_basis_with_derivative(double x, const SplineGrid& grid, std::vector<double>& values,
                                   std::vector<double>& derivatives) {
  const int k = grid.order;
  if (k == 0) {
    values = cox_de_boor(x, grid, 0, nullptr);
    derivatives.assign(values.size(), 0.0);
    return;
  }
  std::vector<double> lower;
  values = cox_de_boor(x, grid, k, &lower);
  const auto& t = grid.knots;
  derivatives.assign(values.size(), 0.0);
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double a = k / (t[j + k] - t[j]) * lower[j];
    const double b = k / (t[j + k + 1] - t[j + 1]) * lower[j + 1];
    derivatives[j] = a - b;
  }
}

LocalBasis local_bspline_basis(double x, const SplineGrid& grid) {
  LocalBasis out;
  const int k = grid.order;
  const long last_knot = static_cast<long>(grid.knots.size()) - 1;
  long span;
  if (x == grid.t_max) {
    span = static_cast<long>(grid.basis_count()) - 1;
  } else {
    if (!(x >= grid.knots.front() && x < grid.knots.back())) return out;
    span = static_cast<long>(std::floor((x - grid.knots.front()) / grid.spacing()));
    // Agree with knot comparisons when rounding lands on the wrong side.
    if (span > last_knot - 1) span = last_knot - 1;
    while (span > 0 && x < grid.knots[static_cast<std::size_t>(span)]) --span;
    while (span < last_knot - 1 && x >= grid.knots[static_cast<std::size_t>(span + 1)]) ++span;
  }
  out.supported = true;
  out.first = span - k;

  // De Boor's triangle on (possibly virtual) knots around the span.
  std::array<double, kMaxSplineOrder + 1> n{};
  std::array<double, kMaxSplineOrder + 1> left{};
  std::array<double, kMaxSplineOrder + 1> right{};
  std::array<double, kMaxSplineOrder + 1> lower{};
  n[0] = 1.0;
  for (int j = 1; j <= k; ++j) {
    if (j == k) lower = n;
    left[j] = x - grid.knot(span + 1 - j);
    right[j] = grid.knot(span + j) - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  out.values = n;
  if (k > 0) {
    const double inv_h = 1.0 / grid.spacing();
    for (int q = 0; q <= k; ++q) {
      const double a = q >= 1 ? lower[q - 1] : 0.0;
      const double b = q <= k - 1 ? lower[q] : 0.0;
      out.derivatives[q] = (a - b) * inv_h;
    }
  }
  return out;
}

}  // namespace fkan
