#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fkan/aggregation.hpp"
#include "fkan/data.hpp"
#include "fkan/model.hpp"
#include "fkan/numeric.hpp"
#include "fkan/rng.hpp"

namespace fkan {

struct FederationConfig {
  std::size_t num_rounds = 20;
  std::size_t local_epochs = 3;
  std::size_t batch_size = 64;
  double lr = 0.005;
  ModelKind model_kind = ModelKind::kan;
  std::vector<std::size_t> hidden = {25, 50};
  StrategyConfig strategy;
  std::uint64_t seed = 42;
  /// Keep each client's Adam moments across rounds instead of resetting them.
  bool persist_optimizer_state = false;
  /// Train the clients of a round on an OpenMP team. Results are identical
  /// either way.
  bool parallel_clients = true;

  /// 20 rounds for KAN, 60 for MLP; 3 local epochs; lr 0.005.
  static FederationConfig defaults_for(ModelKind kind);
  void validate() const;
};

struct RoundRecord {
  std::size_t round = 0;
  double global_test_accuracy = 0.0;
  double global_test_loss = 0.0;
  std::vector<double> per_client_train_loss;
  double wall_time_ms = 0.0;

  /// Equality ignores wall_time_ms.
  bool same_metrics(const RoundRecord& other) const;
};

struct ProxTerm {
  ParamSet global;
  double mu = 0.0;
};

struct LocalTraining {
  std::size_t epochs = 3;
  std::size_t batch_size = 64;
  AdamConfig adam;
  std::optional<ProxTerm> prox;
  /// Seeds the per-epoch shuffles.
  std::uint64_t stream_seed = 0;
};

struct ClientResult {
  ParamSet params;
  /// Mean cross-entropy over the samples of the final epoch (0 when epochs = 0).
  double train_loss = 0.0;
};

/// Order in which one epoch visits the shard; advances `rng`.
std::vector<std::size_t> epoch_order(std::span<const std::size_t> shard, Rng& rng);

/// Local training: epochs x mini-batches of forward / loss / backward /
/// Adam on `model`. Uses a fresh AdamState unless `optimizer` is given.
/// Throws std::runtime_error on a non-finite loss.
ClientResult train_on_client(Model& model, const Dataset& train, std::span<const std::size_t> shard,
                             const LocalTraining& options, AdamState* optimizer = nullptr);

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Argmax accuracy (binary: p >= 0.5 predicts class 1) and mean cross-entropy.
Evaluation evaluate(const Model& model, const Dataset& test);

/// Seed of client `client`'s stream in round `round` (1-based).
std::uint64_t client_stream_seed(std::uint64_t seed, std::size_t round, std::size_t client);

/// Optional observation points, used by tests.
struct RoundHooks {
  /// Called with a client's freshly copied starting parameters; the hook may
  /// modify them to simulate a misbehaving client.
  std::function<void(std::size_t client, ParamSet& start)> on_client_start;
};

/// One synchronous round (Algorithm "copy global, train locally, aggregate").
class FederationEngine {
 public:
  FederationEngine(const Dataset& train, const Dataset& test, std::vector<ClientShard> shards,
                   FederationConfig config);

  RoundRecord run_round(const RoundHooks& hooks = {});
  std::vector<RoundRecord> run();

  const Model& global_model() const { return global_; }
  const FederationConfig& config() const { return config_; }
  const Aggregator& aggregator() const { return aggregator_; }
  std::size_t rounds_completed() const { return round_; }

 private:
  const Dataset& train_;
  const Dataset& test_;
  std::vector<ClientShard> shards_;
  FederationConfig config_;
  Model global_;
  Aggregator aggregator_;
  std::vector<AdamState> optimizers_;
  std::size_t round_ = 0;
};

struct FederationResult {
  std::vector<RoundRecord> records;
  ParamSet final_params;
  Architecture architecture;
};

FederationResult run_federation(const Dataset& train, const Dataset& test,
                                const std::vector<ClientShard>& shards, const FederationConfig& config);

}  // namespace fkan
