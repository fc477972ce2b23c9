#include "fkan/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fkan/kernels.hpp"

namespace fkan {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double silu(double x) { return x * logistic(x); }

double silu_derivative(double x) {
  const double s = logistic(x);
  return s * (1.0 + x * (1.0 - s));
}

Matrix sigmoid(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  auto& o = out.data();
  const auto& in = x.data();
  for (std::size_t i = 0; i < in.size(); ++i)
    o[i] = logistic(std::clamp(in[i], -kSigmoidClamp, kSigmoidClamp));
  return out;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.row(r);
    auto dst = out.row(r);
    const double mx = *std::max_element(src.begin(), src.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < src.size(); ++c) {
      dst[c] = std::exp(std::max(src[c] - mx, -kSoftmaxFloor));
      sum += dst[c];
    }
    for (double& v : dst) v /= sum;
  }
  return out;
}

Matrix relu(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] < 0.0 ? 0.0 : x.data()[i];  // NaN passes through
  return out;
}

Matrix silu(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = silu(x.data()[i]);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) { return kernels::omp::matmul(a, b); }

double loss(const Matrix& predictions, const Matrix& targets, Task task) {
  if (!predictions.same_shape(targets)) {
    throw std::invalid_argument("loss: predictions " + predictions.shape_string() +
                                " vs targets " + targets.shape_string());
  }
  if (predictions.rows() == 0) throw std::invalid_argument("loss: empty batch");
  if (task == Task::binary && predictions.cols() != 1) {
    throw std::invalid_argument("loss: binary task expects a single column, got " +
                                predictions.shape_string());
  }
  constexpr double kTolerance = 1e-9;
  for (double p : predictions.data()) {
    if (!(p >= -kTolerance && p <= 1.0 + kTolerance)) {
      throw std::invalid_argument("loss: prediction " + std::to_string(p) +
                                  " is not a probability");
    }
  }
  const auto safe_log = [](double p) { return std::log(std::max(p, kProbabilityEpsilon)); };
  double total = 0.0;
  const auto& p = predictions.data();
  const auto& t = targets.data();
  if (task == Task::binary) {
    for (std::size_t n = 0; n < p.size(); ++n) {
      double term = 0.0;
      if (t[n] != 0.0) term += t[n] * safe_log(p[n]);
      if (t[n] != 1.0) term += (1.0 - t[n]) * safe_log(1.0 - p[n]);
      total -= term;
    }
  } else {
    for (std::size_t i = 0; i < p.size(); ++i)
      if (t[i] != 0.0) total -= t[i] * safe_log(p[i]);
  }
  // -0.0 -> 0.0
  return total / static_cast<double>(predictions.rows()) + 0.0;
}

AdamState::AdamState(const ParamSet& like, AdamConfig config)
    : config_(config), m_(like.zeros_like()), v_(like.zeros_like()) {
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    throw std::invalid_argument("AdamState: betas must lie in [0, 1)");
  }
}

ParamSet adam_step(AdamState& state, const ParamSet& params, const ParamSet& grads) {
  params.require_congruent(grads, "adam_step(params, grads)");
  params.require_congruent(state.m_, "adam_step(params, state)");
  for (const auto& e : grads.entries()) {
    if (!all_finite(e.tensor)) throw std::invalid_argument("adam_step: non-finite gradient in '" + e.name + "'");
  }
  const AdamConfig& c = state.config_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  ParamSet updated = params;
  for (std::size_t e = 0; e < params.entry_count(); ++e) {
    auto& w = updated.tensor(e).data();
    const auto& g = grads.tensor(e).data();
    auto& m = state.m_.tensor(e).data();
    auto& v = state.v_.tensor(e).data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
  return updated;
}

ParamSet finite_diff_grad(const ParamFunction& f, const ParamSet& params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  ParamSet grad = params.zeros_like();
  ParamSet probe = params;
  for (std::size_t e = 0; e < params.entry_count(); ++e) {
    auto& w = probe.tensor(e).data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double original = w[i];
      w[i] = original + h;
      const double up = f(probe);
      w[i] = original - h;
      const double down = f(probe);
      w[i] = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw std::runtime_error("finite_diff_grad: non-finite evaluation at '" +
                                 params.entry(e).name + "'[" + std::to_string(i) + "]");
      }
      grad.tensor(e).data()[i] = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace fkan
