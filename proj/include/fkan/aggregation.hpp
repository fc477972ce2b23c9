#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fkan/tensor.hpp"

namespace fkan {

enum class StrategyKind { average, median, trimmed_mean, momentum, nesterov, krum, fedprox };

std::string to_string(StrategyKind kind);
/// Config spellings, in canonical order.
const std::vector<std::string>& strategy_names();
/// Throws std::invalid_argument naming `name` and listing the valid spellings.
StrategyKind parse_strategy(const std::string& name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::average;
  double trim_fraction = 0.2;
  double momentum_mu = 0.9;
  /// Unset means the largest admissible value, floor((K - 3) / 2).
  std::optional<std::size_t> krum_f;
  double fedprox_mu = 0.01;
  bool sample_weighted = true;

  void validate() const;
  std::size_t resolved_krum_f(std::size_t clients) const;
  /// e.g. "trimmed_mean", used as the metrics strategy label.
  std::string label() const { return to_string(kind); }
};

struct ClientUpdate {
  ParamSet params;
  std::size_t sample_count = 1;
};

/// Server velocity for momentum strategies. An empty velocity means zero.
struct ServerMomentumState {
  ParamSet velocity;
};

/// Coordinate-wise mean; weighted by sample counts when requested. Terms
/// are summed in ascending order, which makes the result independent of
/// client order.
ParamSet aggregate_average(std::span<const ClientUpdate> clients, bool sample_weighted = true);

/// Coordinate-wise median; even counts take the midpoint of the middle pair.
ParamSet aggregate_median(std::span<const ClientUpdate> clients);

/// Drops t = floor(trim_fraction * K) values at each end per coordinate and
/// averages the rest. Requires 2t < K.
ParamSet aggregate_trimmed_mean(std::span<const ClientUpdate> clients, double trim_fraction);

struct MomentumResult {
  ParamSet params;
  ServerMomentumState state;
};

/// delta = average - global; v <- mu v + delta; returns global + v.
MomentumResult aggregate_momentum(std::span<const ClientUpdate> clients, const ParamSet& global,
                                  const ServerMomentumState& state, double mu,
                                  bool sample_weighted = true);

/// Lookahead form: v <- mu v + delta; returns global + mu v + delta.
MomentumResult aggregate_nesterov(std::span<const ClientUpdate> clients, const ParamSet& global,
                                  const ServerMomentumState& state, double mu,
                                  bool sample_weighted = true);

struct KrumResult {
  std::size_t index = 0;
  ParamSet params;
  std::vector<double> scores;
};

/// Picks the client whose summed squared distance to its K - f - 2 nearest
/// peers is smallest; ties go to the lowest index. Requires K >= f + 3.
KrumResult krum_select(std::span<const ClientUpdate> clients, std::size_t f);

/// (mu / 2) * ||w - w_global||^2
double fedprox_proximal_term(const ParamSet& w, const ParamSet& w_global, double mu);
/// mu * (w - w_global)
ParamSet fedprox_gradient(const ParamSet& w, const ParamSet& w_global, double mu);
inline double fedprox_local_loss(double base_loss, const ParamSet& w, const ParamSet& w_global, double mu) {
  return base_loss + fedprox_proximal_term(w, w_global, mu);
}

/// Applies a StrategyConfig round after round, carrying server momentum.
class Aggregator {
 public:
  explicit Aggregator(StrategyConfig config);

  ParamSet aggregate(std::span<const ClientUpdate> clients, const ParamSet& global);
  void reset() { state_ = {}; }

  const StrategyConfig& config() const { return config_; }
  const ServerMomentumState& state() const { return state_; }
  /// Index chosen by the last Krum round, if any.
  std::optional<std::size_t> last_krum_index() const { return last_krum_; }

 private:
  StrategyConfig config_;
  ServerMomentumState state_;
  std::optional<std::size_t> last_krum_;
};

}  // namespace fkan
