#include <algorithm>
#include <stdexcept>
#include <string>

#include "fkan/kernels.hpp"
#include "fkan/numeric.hpp"

namespace fkan::kernels::serial {

namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                                b.shape_string());
  }
}

std::vector<double> column(const ClientStack& stack, std::size_t d) {
  std::vector<double> v(stack.rows());
  for (std::size_t k = 0; k < stack.rows(); ++k) v[k] = stack(k, d);
  return v;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

Matrix kan_forward(const Matrix& x, const Matrix& base_weight, const Matrix& spline_coeffs,
                   const SplineGrid& grid) {
  const std::size_t in = base_weight.cols();
  const std::size_t out = base_weight.rows();
  require(x.cols() == in, "kan_forward", x, base_weight);
  Matrix y(x.rows(), out);
  for (std::size_t n = 0; n < x.rows(); ++n) {
    for (std::size_t i = 0; i < in; ++i) {
      const double t = x(n, i);
      const std::vector<double> basis = bspline_basis(t, grid);
      const double s = silu(t);
      for (std::size_t j = 0; j < out; ++j) {
        double spline = 0.0;
        for (std::size_t b = 0; b < basis.size(); ++b) spline += spline_coeffs(j * in + i, b) * basis[b];
        y(n, j) += base_weight(j, i) * s + spline;
      }
    }
  }
  return y;
}

KanGrads kan_backward(const Matrix& x, const Matrix& output_grad, const Matrix& base_weight,
                      const Matrix& spline_coeffs, const SplineGrid& grid, bool need_input_grad) {
  const std::size_t in = base_weight.cols();
  const std::size_t out = base_weight.rows();
  require(output_grad.rows() == x.rows() && output_grad.cols() == out, "kan_backward", output_grad,
          base_weight);
  KanGrads g;
  g.base_weight = Matrix(out, in);
  g.spline_coeffs = Matrix(out * in, grid.basis_count());
  if (need_input_grad) g.input_grad = Matrix(x.rows(), in);
  std::vector<double> basis;
  std::vector<double> dbasis;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    for (std::size_t i = 0; i < in; ++i) {
      const double t = x(n, i);
      bspline_basis_with_derivative(t, grid, basis, dbasis);
      const double s = silu(t);
      const double ds = silu_derivative(t);
      for (std::size_t j = 0; j < out; ++j) {
        const double dy = output_grad(n, j);
        g.base_weight(j, i) += dy * s;
        double dspline = 0.0;
        for (std::size_t b = 0; b < basis.size(); ++b) {
          g.spline_coeffs(j * in + i, b) += dy * basis[b];
          dspline += spline_coeffs(j * in + i, b) * dbasis[b];
        }
        if (need_input_grad) g.input_grad(n, i) += dy * (base_weight(j, i) * ds + dspline);
      }
    }
  }
  return g;
}

std::vector<double> weighted_sorted_sum(const ClientStack& stack, std::span<const double> weights) {
  if (weights.size() != stack.rows()) throw std::invalid_argument("weighted_sorted_sum: weight count");
  std::vector<double> out(stack.cols());
  for (std::size_t d = 0; d < stack.cols(); ++d) {
    std::vector<double> terms(stack.rows());
    for (std::size_t k = 0; k < stack.rows(); ++k) terms[k] = weights[k] * stack(k, d);
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    out[d] = s;
  }
  return out;
}

std::vector<double> coordinate_median(const ClientStack& stack) {
  const std::size_t k = stack.rows();
  std::vector<double> out(stack.cols());
  for (std::size_t d = 0; d < stack.cols(); ++d) {
    auto v = column(stack, d);
    std::sort(v.begin(), v.end());
    out[d] = (k % 2 == 1) ? v[k / 2] : (v[k / 2 - 1] + v[k / 2]) / 2.0;
  }
  return out;
}

std::vector<double> coordinate_trimmed_mean(const ClientStack& stack, std::size_t trim) {
  const std::size_t k = stack.rows();
  if (2 * trim >= k) throw std::invalid_argument("coordinate_trimmed_mean: 2t must be < K");
  std::vector<double> out(stack.cols());
  for (std::size_t d = 0; d < stack.cols(); ++d) {
    auto v = column(stack, d);
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (std::size_t i = trim; i < k - trim; ++i) s += v[i];
    const double mean = s / static_cast<double>(k - 2 * trim);
    out[d] = std::clamp(mean, v[trim], v[k - trim - 1]);
  }
  return out;
}

Matrix pairwise_sq_distances(const ClientStack& stack) {
  const std::size_t k = stack.rows();
  Matrix dist(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      double s = 0.0;
      for (std::size_t d = 0; d < stack.cols(); ++d) {
        const double diff = stack(i, d) - stack(j, d);
        s += diff * diff;
      }
      dist(i, j) = s;
    }
  return dist;
}

}  // namespace fkan::kernels::serial
