#pragma once

// Small hand-rolled generators for property tests.

#include <cstdint>
#include <string>
#include <vector>

#include "fkan/rng.hpp"
#include "fkan/tensor.hpp"

namespace fkan::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal(0.0, scale);
  return m;
}

inline std::size_t random_size(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); }

/// Two or three small tensors with random shapes.
inline ParamSet random_params(Rng& rng, std::size_t max_dim = 4, double scale = 1.0) {
  ParamSet p;
  const std::size_t entries = random_size(rng, 1, 3);
  for (std::size_t e = 0; e < entries; ++e)
    p.add("p" + std::to_string(e),
          random_matrix(rng, random_size(rng, 1, max_dim), random_size(rng, 1, max_dim), scale));
  return p;
}

/// Same shapes as `like`, fresh values.
inline ParamSet resample(Rng& rng, const ParamSet& like, double scale = 1.0) {
  ParamSet p = like.zeros_like();
  for (std::size_t e = 0; e < p.entry_count(); ++e)
    for (double& v : p.tensor(e).data()) v = rng.normal(0.0, scale);
  return p;
}

/// Values drawn from a tiny set so ties are common.
inline ParamSet resample_with_ties(Rng& rng, const ParamSet& like) {
  ParamSet p = like.zeros_like();
  for (std::size_t e = 0; e < p.entry_count(); ++e)
    for (double& v : p.tensor(e).data()) v = static_cast<double>(rng.index(4)) - 1.5;
  return p;
}

}  // namespace fkan::testing

namespace fkan::testing {

/// Textbook Cox-de Boor recursion over an explicit knot list.
inline double cox_de_boor(const std::vector<double>& t, std::size_t i, int k, double x) {
  if (k == 0) return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
  double left = 0.0, right = 0.0;
  if (t[i + k] != t[i]) left = (x - t[i]) / (t[i + k] - t[i]) * cox_de_boor(t, i, k - 1, x);
  if (t[i + k + 1] != t[i + 1])
    right = (t[i + k + 1] - x) / (t[i + k + 1] - t[i + 1]) * cox_de_boor(t, i + 1, k - 1, x);
  return left + right;
}

/// Uniform knots t_m = lo + (m - k) h for m = 0 .. g + 2k.
inline std::vector<double> uniform_knots(int k, int g, double lo, double hi) {
  std::vector<double> t;
  const double h = (hi - lo) / g;
  for (int m = -k; m <= g + k; ++m) t.push_back(lo + m * h);
  return t;
}

}  // namespace fkan::testing
