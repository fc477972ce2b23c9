// OpenMP kernels against the serial reference, at sizes large enough to
// take the parallel path.

#include <omp.h>

#include "doctest.h"
#include "fkan/kernels.hpp"
#include "support.hpp"

using namespace fkan;
namespace ks = fkan::kernels::serial;
namespace ko = fkan::kernels::omp;

namespace {

struct ThreadCount {
  explicit ThreadCount(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved); }
  int saved;
};

void check_close(const Matrix& a, const Matrix& b, double tol) {
  REQUIRE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(tol));
}

}  // namespace

TEST_CASE("matmul variants are bit-identical to the serial reference") {
  ThreadCount threads(4);
  Rng rng(1);
  for (auto [m, k, n] : {std::tuple{3, 4, 5}, std::tuple{200, 60, 70}, std::tuple{1, 1, 1}}) {
    const Matrix a = testing::random_matrix(rng, m, k), b = testing::random_matrix(rng, k, n);
    CHECK(ko::matmul(a, b) == ks::matmul(a, b));
    const Matrix at = transpose(a);
    CHECK(ko::matmul_tn(at, b) == ks::matmul_tn(at, b));
    const Matrix bt = transpose(b);
    CHECK(ko::matmul_nt(a, bt) == ks::matmul_nt(a, bt));
    CHECK(ko::matmul_tn(at, b) == ks::matmul(a, b));
  }
  CHECK_THROWS_AS(ko::matmul(Matrix(2, 3), Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("KAN forward/backward: local basis path matches the dense reference") {
  ThreadCount threads(4);
  Rng rng(2);
  const SplineGrid grid = SplineGrid::uniform(3, 5, -1.0, 1.0);
  for (auto [batch, in, out] : {std::tuple{4, 3, 2}, std::tuple{128, 25, 50}}) {
    // Some inputs fall outside the domain and the extended span.
    const Matrix x = testing::random_matrix(rng, batch, in, 1.2);
    const Matrix base = testing::random_matrix(rng, out, in, 0.3);
    const Matrix coeffs = testing::random_matrix(rng, out * in, grid.basis_count(), 0.1);
    kernels::KanCache cache;
    const Matrix y = ko::kan_forward(x, base, coeffs, grid, &cache);
    check_close(y, ks::kan_forward(x, base, coeffs, grid), 1e-12);
    CHECK(ko::kan_forward(x, base, coeffs, grid, nullptr) == y);

    const Matrix dy = testing::random_matrix(rng, batch, out);
    const kernels::KanGrads fast = ko::kan_backward(cache, dy, base, coeffs, grid, true);
    const kernels::KanGrads ref = ks::kan_backward(x, dy, base, coeffs, grid, true);
    check_close(fast.base_weight, ref.base_weight, 1e-12);
    check_close(fast.spline_coeffs, ref.spline_coeffs, 1e-12);
    check_close(fast.input_grad, ref.input_grad, 1e-11);
    CHECK(ko::kan_backward(cache, dy, base, coeffs, grid, false).input_grad.empty());
  }
}

TEST_CASE("KAN kernels do not depend on the thread count") {
  Rng rng(3);
  const SplineGrid grid = SplineGrid::uniform(3, 5, -1.0, 1.0);
  const Matrix x = testing::random_matrix(rng, 256, 25, 0.6);
  const Matrix base = testing::random_matrix(rng, 50, 25, 0.3);
  const Matrix coeffs = testing::random_matrix(rng, 50 * 25, grid.basis_count(), 0.1);
  const Matrix dy = testing::random_matrix(rng, 256, 50);
  auto run = [&](int n) {
    ThreadCount threads(n);
    kernels::KanCache cache;
    Matrix y = ko::kan_forward(x, base, coeffs, grid, &cache);
    kernels::KanGrads g = ko::kan_backward(cache, dy, base, coeffs, grid, true);
    return std::tuple{y, g.base_weight, g.spline_coeffs, g.input_grad};
  };
  CHECK(run(1) == run(3));
}

TEST_CASE("aggregation kernels are bit-identical to the serial reference") {
  ThreadCount threads(4);
  Rng rng(4);
  for (std::size_t k : {1, 2, 5, 20}) {
    for (std::size_t dims : {7, 5000}) {
      const Matrix stack = testing::random_matrix(rng, k, dims);
      std::vector<double> w(k);
      for (double& v : w) v = rng.uniform(0.0, 1.0);
      CHECK(ko::weighted_sorted_sum(stack, w) == ks::weighted_sorted_sum(stack, w));
      CHECK(ko::coordinate_median(stack) == ks::coordinate_median(stack));
      for (std::size_t t = 0; 2 * t < k; ++t)
        CHECK(ko::coordinate_trimmed_mean(stack, t) == ks::coordinate_trimmed_mean(stack, t));
      CHECK(ko::pairwise_sq_distances(stack) == ks::pairwise_sq_distances(stack));
    }
  }
  CHECK_THROWS_AS(ko::coordinate_trimmed_mean(Matrix(4, 2), 2), std::invalid_argument);
  CHECK_THROWS_AS(ks::coordinate_trimmed_mean(Matrix(4, 2), 2), std::invalid_argument);
}
