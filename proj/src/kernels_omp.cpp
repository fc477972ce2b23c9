#include <omp.h>

#include <algorithm>
#include <stdexcept>
#include <string>

#include "fkan/kernels.hpp"
#include "fkan/numeric.hpp"

namespace fkan::kernels::omp {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                                b.shape_string());
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  const std::size_t m = a.rows(), n = b.cols(), inner = a.cols();
  Matrix c(m, n);
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = c.data().data();
#pragma omp parallel for schedule(static) if (m * n * inner > kParallelWork)
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = C + i * n;
    const double* ai = A + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = ai[k];
      const double* bk = B + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  const std::size_t m = a.cols(), n = b.cols(), inner = a.rows();
  Matrix c(m, n);
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = c.data().data();
#pragma omp parallel for schedule(static) if (m * n * inner > kParallelWork)
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = C + i * n;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aki = A[k * m + i];
      const double* bk = B + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  const std::size_t m = a.rows(), n = b.rows(), inner = a.cols();
  Matrix c(m, n);
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = c.data().data();
#pragma omp parallel for schedule(static) if (m * n * inner > kParallelWork)
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = A + i * inner;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = B + j * inner;
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += ai[k] * bj[k];
      C[i * n + j] = s;
    }
  }
  return c;
}

Matrix kan_forward(const Matrix& x, const Matrix& base_weight, const Matrix& spline_coeffs,
                   const SplineGrid& grid, KanCache* cache) {
  const std::size_t in = base_weight.cols();
  const std::size_t out = base_weight.rows();
  const std::size_t nb = grid.basis_count();
  const long nb_l = static_cast<long>(nb);
  require(x.cols() == in, "kan_forward", x, base_weight);
  require(spline_coeffs.rows() == out * in && spline_coeffs.cols() == nb, "kan_forward(coeffs)",
          spline_coeffs, base_weight);
  const std::size_t batch = x.rows();
  const int k = grid.order;

  if (cache) {
    cache->batch = batch;
    cache->in_dim = in;
    cache->silu = Matrix(batch, in);
    cache->silu_derivative = Matrix(batch, in);
    cache->basis.assign(batch * in, LocalBasis{});
  }

  Matrix y(batch, out);
  const double* coeff = spline_coeffs.data().data();
  const double* base = base_weight.data().data();
#pragma omp parallel for schedule(static) if (batch * in * out * (k + 2) > kParallelWork)
  for (std::size_t n = 0; n < batch; ++n) {
    double* yn = &y(n, 0);
    for (std::size_t i = 0; i < in; ++i) {
      const double t = x(n, i);
      const double s = silu(t);
      const LocalBasis lb = local_bspline_basis(t, grid);
      if (cache) {
        cache->silu(n, i) = s;
        cache->silu_derivative(n, i) = silu_derivative(t);
        cache->basis[n * in + i] = lb;
      }
      const long q_lo = lb.supported ? std::max(0L, -lb.first) : 0;
      const long q_hi = lb.supported ? std::min<long>(k, nb_l - 1 - lb.first) : -1;
      for (std::size_t j = 0; j < out; ++j) {
        const double* cj = coeff + (j * in + i) * nb;
        double spline = 0.0;
        for (long q = q_lo; q <= q_hi; ++q) spline += cj[lb.first + q] * lb.values[q];
        yn[j] += base[j * in + i] * s + spline;
      }
    }
  }
  return y;
}

KanGrads kan_backward(const KanCache& cache, const Matrix& output_grad, const Matrix& base_weight,
                      const Matrix& spline_coeffs, const SplineGrid& grid, bool need_input_grad) {
  const std::size_t in = base_weight.cols();
  const std::size_t out = base_weight.rows();
  const std::size_t nb = grid.basis_count();
  const long nb_l = static_cast<long>(nb);
  const std::size_t batch = cache.batch;
  const int k = grid.order;
  if (cache.in_dim != in || output_grad.rows() != batch || output_grad.cols() != out) {
    throw std::invalid_argument("kan_backward: cache " + std::to_string(batch) + "x" +
                                std::to_string(cache.in_dim) + " does not match gradient " +
                                output_grad.shape_string() + " / weights " +
                                base_weight.shape_string());
  }
  KanGrads g;
  g.base_weight = Matrix(out, in);
  g.spline_coeffs = Matrix(out * in, nb);
  const double* coeff = spline_coeffs.data().data();
  const double* base = base_weight.data().data();
  const std::size_t work = batch * in * out * (k + 2);

  // Parameter gradients: each thread owns whole output rows j.
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::size_t j = 0; j < out; ++j) {
    double* gb = &g.base_weight(j, 0);
    for (std::size_t n = 0; n < batch; ++n) {
      const double dy = output_grad(n, j);
      for (std::size_t i = 0; i < in; ++i) {
        gb[i] += dy * cache.silu(n, i);
        const LocalBasis& lb = cache.basis[n * in + i];
        if (!lb.supported) continue;
        double* gc = &g.spline_coeffs(j * in + i, 0);
        const long q_lo = std::max(0L, -lb.first);
        const long q_hi = std::min<long>(k, nb_l - 1 - lb.first);
        for (long q = q_lo; q <= q_hi; ++q) gc[lb.first + q] += dy * lb.values[q];
      }
    }
  }

  if (need_input_grad) {
    g.input_grad = Matrix(batch, in);
#pragma omp parallel for schedule(static) if (work > kParallelWork)
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t i = 0; i < in; ++i) {
        const LocalBasis& lb = cache.basis[n * in + i];
        const long q_lo = lb.supported ? std::max(0L, -lb.first) : 0;
        const long q_hi = lb.supported ? std::min<long>(k, nb_l - 1 - lb.first) : -1;
        const double ds = cache.silu_derivative(n, i);
        double acc = 0.0;
        for (std::size_t j = 0; j < out; ++j) {
          const double* cj = coeff + (j * in + i) * nb;
          double dspline = 0.0;
          for (long q = q_lo; q <= q_hi; ++q) dspline += cj[lb.first + q] * lb.derivatives[q];
          acc += output_grad(n, j) * (base[j * in + i] * ds + dspline);
        }
        g.input_grad(n, i) = acc;
      }
    }
  }
  return g;
}

std::vector<double> weighted_sorted_sum(const ClientStack& stack, std::span<const double> weights) {
  if (weights.size() != stack.rows()) throw std::invalid_argument("weighted_sorted_sum: weight count");
  const std::size_t kk = stack.rows(), dims = stack.cols();
  std::vector<double> out(dims);
#pragma omp parallel if (kk * dims > kParallelWork)
  {
    std::vector<double> terms(kk);
#pragma omp for schedule(static)
    for (std::size_t d = 0; d < dims; ++d) {
      for (std::size_t k = 0; k < kk; ++k) terms[k] = weights[k] * stack(k, d);
      std::sort(terms.begin(), terms.end());
      double s = 0.0;
      for (double t : terms) s += t;
      out[d] = s;
    }
  }
  return out;
}

std::vector<double> coordinate_median(const ClientStack& stack) {
  const std::size_t kk = stack.rows(), dims = stack.cols();
  std::vector<double> out(dims);
#pragma omp parallel if (kk * dims > kParallelWork)
  {
    std::vector<double> v(kk);
#pragma omp for schedule(static)
    for (std::size_t d = 0; d < dims; ++d) {
      for (std::size_t k = 0; k < kk; ++k) v[k] = stack(k, d);
      const auto mid = v.begin() + static_cast<long>(kk / 2);
      std::nth_element(v.begin(), mid, v.end());
      if (kk % 2 == 1) {
        out[d] = *mid;
      } else {
        const double lower = *std::max_element(v.begin(), mid);
        out[d] = (lower + *mid) / 2.0;
      }
    }
  }
  return out;
}

std::vector<double> coordinate_trimmed_mean(const ClientStack& stack, std::size_t trim) {
  const std::size_t kk = stack.rows(), dims = stack.cols();
  if (2 * trim >= kk) throw std::invalid_argument("coordinate_trimmed_mean: 2t must be < K");
  std::vector<double> out(dims);
#pragma omp parallel if (kk * dims > kParallelWork)
  {
    std::vector<double> v(kk);
#pragma omp for schedule(static)
    for (std::size_t d = 0; d < dims; ++d) {
      for (std::size_t k = 0; k < kk; ++k) v[k] = stack(k, d);
      std::sort(v.begin(), v.end());
      double s = 0.0;
      for (std::size_t i = trim; i < kk - trim; ++i) s += v[i];
      const double mean = s / static_cast<double>(kk - 2 * trim);
      out[d] = std::clamp(mean, v[trim], v[kk - trim - 1]);
    }
  }
  return out;
}

Matrix pairwise_sq_distances(const ClientStack& stack) {
  const std::size_t kk = stack.rows(), dims = stack.cols();
  Matrix dist(kk, kk);
  const long pairs = static_cast<long>(kk * kk);
#pragma omp parallel for schedule(static) if (kk * kk * dims > kParallelWork)
  for (long p = 0; p < pairs; ++p) {
    const std::size_t i = static_cast<std::size_t>(p) / kk;
    const std::size_t j = static_cast<std::size_t>(p) % kk;
    if (i == j) continue;
    const double* a = stack.row(i).data();
    const double* b = stack.row(j).data();
    double s = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double diff = a[d] - b[d];
      s += diff * diff;
    }
    dist(i, j) = s;
  }
  return dist;
}

}  // namespace fkan::kernels::omp
