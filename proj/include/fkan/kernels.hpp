#pragma once

// Data-parallel inner loops. Every kernel exists twice: a plain serial
// reference (namespace serial) kept for testing and benchmarking, and the
// OpenMP version (namespace omp) used by the library. OpenMP kernels split
// work only across independent outputs, never across a reduction, so their
// results do not depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fkan/spline.hpp"
#include "fkan/tensor.hpp"

namespace fkan::kernels {

/// Per-sample quantities a KAN layer's backward pass needs.
struct KanCache {
  std::size_t batch = 0;
  std::size_t in_dim = 0;
  Matrix silu;             // batch x in_dim
  Matrix silu_derivative;  // batch x in_dim
  std::vector<LocalBasis> basis;  // batch * in_dim, row-major
};

/// Gradients of one KAN layer. input_grad is empty when not requested.
struct KanGrads {
  Matrix base_weight;   // out x in
  Matrix spline_coeffs; // (out * in) x basis_count
  Matrix input_grad;    // batch x in
};

/// Stack of K flattened client vectors: row k is client k.
using ClientStack = Matrix;

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
/// A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// y[n,j] = sum_i base[j,i] silu(x[n,i]) + sum_b coeffs[j*in+i, b] B_b(x[n,i])
/// using the dense Cox-de Boor basis.
Matrix kan_forward(const Matrix& x, const Matrix& base_weight, const Matrix& spline_coeffs,
                   const SplineGrid& grid);
KanGrads kan_backward(const Matrix& x, const Matrix& output_grad, const Matrix& base_weight,
                      const Matrix& spline_coeffs, const SplineGrid& grid, bool need_input_grad);

/// sum_k weights[k] * stack[k, d] per coordinate, terms added in ascending order.
std::vector<double> weighted_sorted_sum(const ClientStack& stack, std::span<const double> weights);
std::vector<double> coordinate_median(const ClientStack& stack);
/// Mean of the values left after dropping `trim` lowest and `trim` highest.
std::vector<double> coordinate_trimmed_mean(const ClientStack& stack, std::size_t trim);
/// K x K matrix of squared Euclidean distances between rows.
Matrix pairwise_sq_distances(const ClientStack& stack);

}  // namespace serial

namespace omp {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Local-basis evaluation; fills `cache` when non-null.
Matrix kan_forward(const Matrix& x, const Matrix& base_weight, const Matrix& spline_coeffs,
                   const SplineGrid& grid, KanCache* cache);
KanGrads kan_backward(const KanCache& cache, const Matrix& output_grad, const Matrix& base_weight,
                      const Matrix& spline_coeffs, const SplineGrid& grid, bool need_input_grad);

std::vector<double> weighted_sorted_sum(const ClientStack& stack, std::span<const double> weights);
std::vector<double> coordinate_median(const ClientStack& stack);
std::vector<double> coordinate_trimmed_mean(const ClientStack& stack, std::size_t trim);
Matrix pairwise_sq_distances(const ClientStack& stack);

}  // namespace omp

}  // namespace fkan::kernels
