#include "fkan/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "fkan/rng.hpp"

namespace fkan {

namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

std::string layer_name(const char* prefix, std::size_t layer, const char* what) {
  return std::string(prefix) + "." + std::to_string(layer) + "." + what;
}

std::size_t layer_count(const Architecture& arch) { return arch.widths.size() - 1; }

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::kan ? "kan" : "mlp"; }

ModelKind parse_model_kind(const std::string& name) {
  if (name == "kan") return ModelKind::kan;
  if (name == "mlp") return ModelKind::mlp;
  throw std::invalid_argument("unknown model '" + name + "' (valid: kan, mlp)");
}

void Architecture::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("Architecture: need input and output widths");
  for (std::size_t w : widths)
    if (w == 0) throw std::invalid_argument("Architecture: widths must be positive");
  if (kind == ModelKind::kan && !(input_clip > 0.0))
    throw std::invalid_argument("Architecture: input_clip must be positive");
}

Architecture make_architecture(ModelKind kind, std::size_t input_width, std::size_t class_count,
                               const std::vector<std::size_t>& hidden) {
  if (class_count < 2) throw std::invalid_argument("make_architecture: need at least two classes");
  Architecture arch;
  arch.kind = kind;
  arch.widths.push_back(input_width);
  arch.widths.insert(arch.widths.end(), hidden.begin(), hidden.end());
  arch.widths.push_back(class_count == 2 ? 1 : class_count);
  arch.validate();
  return arch;
}

Model::Model(Architecture arch, ParamSet params)
    : arch_(std::move(arch)), params_(std::move(params)), version_(next_version()) {}

Model Model::zeros(const Architecture& arch) {
  arch.validate();
  ParamSet p;
  for (std::size_t l = 0; l < layer_count(arch); ++l) {
    const std::size_t in = arch.widths[l], out = arch.widths[l + 1];
    if (arch.kind == ModelKind::mlp) {
      p.add(layer_name("mlp", l, "weight"), Matrix(in, out));
      p.add(layer_name("mlp", l, "bias"), Matrix(1, out));
    } else {
      p.add(layer_name("kan", l, "base_weight"), Matrix(out, in));
      p.add(layer_name("kan", l, "spline_coeffs"), Matrix(out * in, arch.grid.basis_count()));
    }
  }
  return Model(arch, std::move(p));
}

Model Model::init(const Architecture& arch, std::uint64_t seed) {
  Model m = zeros(arch);
  Rng rng(derive_seed({seed, 0x1a17ULL}));
  for (std::size_t l = 0; l < layer_count(arch); ++l) {
    const double in = static_cast<double>(arch.widths[l]);
    const double out = static_cast<double>(arch.widths[l + 1]);
    if (arch.kind == ModelKind::mlp) {
      const double bound = std::sqrt(6.0 / in);
      for (double& w : m.params_.tensor(2 * l).data()) w = rng.uniform(-bound, bound);
    } else {
      const double bound = std::sqrt(6.0 / (in + out));
      for (double& w : m.params_.tensor(2 * l).data()) w = rng.uniform(-bound, bound);
      for (double& c : m.params_.tensor(2 * l + 1).data()) c = rng.normal(0.0, 0.1);
    }
  }
  return m;
}

void Model::assign_params(const ParamSet& params) {
  params_.require_congruent(params, "assign_params");
  params_ = params;
  version_ = next_version();
}

Matrix Model::map_kan_input(const Matrix& x) const {
  Matrix mapped(x.rows(), x.cols());
  const double clip = arch_.input_clip;
  for (std::size_t i = 0; i < x.size(); ++i)
    mapped.data()[i] = std::clamp(x.data()[i], -clip, clip) / clip;
  return mapped;
}

Matrix Model::head(const Matrix& logits) const {
  return task() == Task::binary ? sigmoid(logits) : softmax_rows(logits);
}

Matrix Model::run(const Matrix& x, ForwardCache* cache) const {
  if (x.cols() != arch_.widths.front()) {
    throw std::invalid_argument("forward: input " + x.shape_string() + " but model expects " +
                                std::to_string(arch_.widths.front()) + " features");
  }
  if (cache) {
    *cache = ForwardCache{};
    cache->params_version = version_;
    cache->batch = x.rows();
  }
  const std::size_t layers = layer_count(arch_);
  Matrix a = arch_.kind == ModelKind::kan ? map_kan_input(x) : x;
  for (std::size_t l = 0; l < layers; ++l) {
    if (arch_.kind == ModelKind::mlp) {
      Matrix z = kernels::omp::matmul(a, params_.tensor(2 * l));
      const auto& bias = params_.tensor(2 * l + 1).data();
      for (std::size_t n = 0; n < z.rows(); ++n)
        for (std::size_t j = 0; j < z.cols(); ++j) z(n, j) += bias[j];
      if (cache) cache->inputs.push_back(std::move(a));
      if (l + 1 < layers) {
        a = relu(z);
        if (cache) cache->pre_activations.push_back(std::move(z));
      } else {
        a = std::move(z);
      }
    } else {
      kernels::KanCache* kc = nullptr;
      if (cache) kc = &cache->kan.emplace_back();
      a = kernels::omp::kan_forward(a, params_.tensor(2 * l), params_.tensor(2 * l + 1), arch_.grid, kc);
    }
  }
  return head(a);
}

Model::Forward Model::forward(const Matrix& x) const {
  Forward f;
  f.probs = run(x, &f.cache);
  return f;
}

Matrix Model::predict(const Matrix& x) const { return run(x, nullptr); }

ParamSet Model::backward(const ForwardCache& cache, const Matrix& probs, const Matrix& targets) const {
  if (cache.params_version != version_) {
    throw std::invalid_argument("backward: cache belongs to different parameters (stale cache)");
  }
  if (!probs.same_shape(targets) || probs.rows() != cache.batch || probs.cols() != arch_.widths.back()) {
    throw std::invalid_argument("backward: probs " + probs.shape_string() + " / targets " +
                                targets.shape_string() + " do not match cached batch of " +
                                std::to_string(cache.batch));
  }
  const std::size_t layers = layer_count(arch_);
  const double inv_n = 1.0 / static_cast<double>(cache.batch);
  // Sigmoid + BCE and softmax + CE share dL/dlogits = (p - t) / N.
  Matrix delta(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.size(); ++i)
    delta.data()[i] = (probs.data()[i] - targets.data()[i]) * inv_n;

  ParamSet grads = params_.zeros_like();
  for (std::size_t step = 0; step < layers; ++step) {
    const std::size_t l = layers - 1 - step;
    if (arch_.kind == ModelKind::mlp) {
      const Matrix& a = cache.inputs[l];
      grads.tensor(2 * l) = kernels::omp::matmul_tn(a, delta);
      auto& gb = grads.tensor(2 * l + 1).data();
      for (std::size_t n = 0; n < delta.rows(); ++n)
        for (std::size_t j = 0; j < delta.cols(); ++j) gb[j] += delta(n, j);
      if (l > 0) {
        Matrix da = kernels::omp::matmul_nt(delta, params_.tensor(2 * l));
        const Matrix& z = cache.pre_activations[l - 1];
        for (std::size_t i = 0; i < da.size(); ++i)
          if (!(z.data()[i] > 0.0)) da.data()[i] = 0.0;
        delta = std::move(da);
      }
    } else {
      kernels::KanGrads g = kernels::omp::kan_backward(cache.kan[l], delta, params_.tensor(2 * l),
                                                       params_.tensor(2 * l + 1), arch_.grid, l > 0);
      grads.tensor(2 * l) = std::move(g.base_weight);
      grads.tensor(2 * l + 1) = std::move(g.spline_coeffs);
      if (l > 0) delta = std::move(g.input_grad);
    }
  }
  return grads;
}

Matrix encode_targets(std::span<const int> labels, std::size_t head_width) {
  if (head_width == 1) {
    Matrix t(labels.size(), 1);
    for (std::size_t n = 0; n < labels.size(); ++n) {
      if (labels[n] != 0 && labels[n] != 1) throw std::invalid_argument("encode_targets: binary label out of range");
      t(n, 0) = labels[n];
    }
    return t;
  }
  Matrix t(labels.size(), head_width);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= head_width)
      throw std::invalid_argument("encode_targets: label out of range");
    t(n, static_cast<std::size_t>(labels[n])) = 1.0;
  }
  return t;
}

}  // namespace fkan
