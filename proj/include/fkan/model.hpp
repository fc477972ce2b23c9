#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fkan/kernels.hpp"
#include "fkan/numeric.hpp"
#include "fkan/spline.hpp"
#include "fkan/tensor.hpp"

namespace fkan {

enum class ModelKind { kan, mlp };

std::string to_string(ModelKind kind);
/// Accepts "kan" or "mlp"; throws std::invalid_argument otherwise.
ModelKind parse_model_kind(const std::string& name);

/// Network shape. widths = {input, hidden..., output}. An output width of 1
/// selects a sigmoid head (binary task); wider outputs use softmax.
struct Architecture {
  ModelKind kind = ModelKind::kan;
  std::vector<std::size_t> widths;
  SplineGrid grid = SplineGrid::uniform(3, 5, -1.0, 1.0);
  /// KAN inputs are clipped to [-input_clip, input_clip] and divided by
  /// input_clip before the first spline layer.
  double input_clip = 3.0;

  Task task() const { return widths.back() == 1 ? Task::binary : Task::multiclass; }
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// {input, hidden..., out} with out = 1 for two classes, otherwise the class count.
Architecture make_architecture(ModelKind kind, std::size_t input_width, std::size_t class_count,
                               const std::vector<std::size_t>& hidden = {25, 50});

/// Intermediates from one forward call, consumed by Model::backward.
struct ForwardCache {
  std::uint64_t params_version = 0;
  std::size_t batch = 0;
  std::vector<Matrix> inputs;          // MLP: input to each layer
  std::vector<Matrix> pre_activations; // MLP hidden pre-activations
  std::vector<kernels::KanCache> kan;  // KAN per-layer basis caches
};

class Model {
 public:
  struct Forward {
    Matrix probs;
    ForwardCache cache;
  };

  /// MLP: Kaiming-uniform weights, zero biases. KAN: N(0, 0.1^2) spline
  /// coefficients and Xavier-uniform base weights. Deterministic in seed.
  static Model init(const Architecture& arch, std::uint64_t seed);
  /// All parameters zero.
  static Model zeros(const Architecture& arch);

  const Architecture& architecture() const { return arch_; }
  Task task() const { return arch_.task(); }

  Forward forward(const Matrix& x) const;
  /// Probabilities without keeping a cache.
  Matrix predict(const Matrix& x) const;

  /// Gradient of the mean cross-entropy w.r.t. every parameter. Throws
  /// std::invalid_argument if the cache came from different parameters or
  /// a different batch.
  ParamSet backward(const ForwardCache& cache, const Matrix& probs, const Matrix& targets) const;

  const ParamSet& params() const { return params_; }
  ParamSet extract_params() const { return params_; }
  /// Throws std::invalid_argument on architecture mismatch.
  void assign_params(const ParamSet& params);

 private:
  Model(Architecture arch, ParamSet params);
  Matrix run(const Matrix& x, ForwardCache* cache) const;
  Matrix map_kan_input(const Matrix& x) const;
  Matrix head(const Matrix& logits) const;

  Architecture arch_;
  ParamSet params_;
  std::uint64_t version_ = 0;
};

/// Binary: N x 1 column of {0,1}. Multiclass: N x width one-hot rows.
Matrix encode_targets(std::span<const int> labels, std::size_t head_width);

}  // namespace fkan
