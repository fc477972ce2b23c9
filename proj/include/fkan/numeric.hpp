#pragma once

#include <cstdint>
#include <functional>

#include "fkan/tensor.hpp"

namespace fkan {

enum class Task { binary, multiclass };

// Logistic input is clamped to [-36, 36] so outputs stay strictly inside
// (0, 1) in double precision.
inline constexpr double kSigmoidClamp = 36.0;
// Softmax exponents below max - 700 are raised to max - 700 so no class
// probability underflows to exactly zero.
inline constexpr double kSoftmaxFloor = 700.0;
// Lower bound applied to probabilities inside log().
inline constexpr double kProbabilityEpsilon = 1e-12;

/// Unclamped, overflow-safe logistic function.
double logistic(double x);
double silu(double x);
double silu_derivative(double x);

Matrix sigmoid(const Matrix& x);
Matrix softmax_rows(const Matrix& x);
Matrix relu(const Matrix& x);
Matrix silu(const Matrix& x);

/// C = A * B. Throws std::invalid_argument naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Mean cross-entropy. Binary: predictions and targets are N x 1 columns of
/// sigmoid outputs and {0,1} labels. Multiclass: N x C softmax rows and
/// one-hot targets.
double loss(const Matrix& predictions, const Matrix& targets, Task task);

struct AdamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for one optimized ParamSet.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const ParamSet& like, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  const ParamSet& first_moment() const { return m_; }
  const ParamSet& second_moment() const { return v_; }
  std::uint64_t step_count() const { return step_; }

  friend ParamSet adam_step(AdamState& state, const ParamSet& params, const ParamSet& grads);

 private:
  AdamConfig config_;
  ParamSet m_;
  ParamSet v_;
  std::uint64_t step_ = 0;
};

/// One bias-corrected Adam update. Advances `state` and returns the new
/// parameters. Throws on shape mismatch or non-finite gradients.
ParamSet adam_step(AdamState& state, const ParamSet& params, const ParamSet& grads);

using ParamFunction = std::function<double(const ParamSet&)>;

/// Central differences (f(w + h e) - f(w - h e)) / 2h for every scalar.
ParamSet finite_diff_grad(const ParamFunction& f, const ParamSet& params, double h);

}  // namespace fkan
