#include "fkan/federation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>

#include "fkan/rng.hpp"

namespace fkan {

FederationConfig FederationConfig::defaults_for(ModelKind kind) {
  FederationConfig c;
  c.model_kind = kind;
  c.num_rounds = kind == ModelKind::kan ? 20 : 60;
  return c;
}

void FederationConfig::validate() const {
  if (num_rounds < 1) throw std::invalid_argument("num_rounds must be >= 1");
  if (local_epochs < 1) throw std::invalid_argument("local_epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  strategy.validate();
}

bool RoundRecord::same_metrics(const RoundRecord& other) const {
  return round == other.round && global_test_accuracy == other.global_test_accuracy &&
         global_test_loss == other.global_test_loss && per_client_train_loss == other.per_client_train_loss;
}

std::vector<std::size_t> epoch_order(std::span<const std::size_t> shard, Rng& rng) {
  std::vector<std::size_t> order(shard.begin(), shard.end());
  rng.shuffle(order);
  return order;
}

ClientResult train_on_client(Model& model, const Dataset& train, std::span<const std::size_t> shard,
                             const LocalTraining& options, AdamState* optimizer) {
  if (shard.empty()) throw std::invalid_argument("train_on_client: empty shard");
  if (options.batch_size == 0) throw std::invalid_argument("train_on_client: batch_size must be positive");
  ClientResult result;
  if (options.epochs == 0) {
    result.params = model.extract_params();
    return result;
  }
  AdamState fresh;
  AdamState* adam = optimizer;
  if (!adam || adam->first_moment().entry_count() == 0) {
    fresh = AdamState(model.params(), options.adam);
    if (adam) *adam = fresh;
    else adam = &fresh;
  }
  const bool use_prox = options.prox && options.prox->mu != 0.0;
  const std::size_t width = model.architecture().widths.back();
  const Task task = model.task();

  Rng rng(options.stream_seed);
  std::vector<std::size_t> batch_idx;
  std::vector<int> batch_labels;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const std::vector<std::size_t> order = epoch_order(shard, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      batch_idx.assign(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(stop));
      Dataset batch = train.subset(batch_idx);
      const Matrix targets = encode_targets(batch.labels, width);
      Model::Forward f = model.forward(batch.features);
      for (double p : f.probs.data())
        if (!std::isfinite(p)) throw std::runtime_error("non-finite training loss (model output is not finite)");
      const double batch_loss = loss(f.probs, targets, task);
      if (!std::isfinite(batch_loss)) throw std::runtime_error("non-finite training loss");
      epoch_loss += batch_loss * static_cast<double>(stop - start);
      ParamSet grads = model.backward(f.cache, f.probs, targets);
      if (use_prox) {
        const ParamSet pg = fedprox_gradient(model.params(), options.prox->global, options.prox->mu);
        for (std::size_t e = 0; e < grads.entry_count(); ++e) {
          auto& g = grads.tensor(e).data();
          const auto& p = pg.tensor(e).data();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += p[i];
        }
      }
      model.assign_params(adam_step(*adam, model.params(), grads));
    }
    result.train_loss = epoch_loss / static_cast<double>(order.size());
  }
  result.params = model.extract_params();
  return result;
}

Evaluation evaluate(const Model& model, const Dataset& test) {
  if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  constexpr std::size_t kChunk = 1024;
  const std::size_t width = model.architecture().widths.back();
  std::size_t correct = 0;
  double loss_sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < test.size(); start += kChunk) {
    const std::size_t stop = std::min(test.size(), start + kChunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const Dataset chunk = test.subset(idx);
    const Matrix probs = model.predict(chunk.features);
    loss_sum += loss(probs, encode_targets(chunk.labels, width), model.task()) * static_cast<double>(idx.size());
    for (std::size_t n = 0; n < probs.rows(); ++n) {
      int predicted;
      if (width == 1) {
        predicted = probs(n, 0) >= 0.5 ? 1 : 0;
      } else {
        auto row = probs.row(n);
        predicted = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      }
      if (predicted == chunk.labels[n]) ++correct;
    }
  }
  const double n = static_cast<double>(test.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

std::uint64_t client_stream_seed(std::uint64_t seed, std::size_t round, std::size_t client) {
  return derive_seed({seed, round, client, 0xc11eULL});
}

namespace {

Model initial_model(const Dataset& train, const FederationConfig& config) {
  const Architecture arch = make_architecture(config.model_kind, train.feature_count(), train.class_count, config.hidden);
  return Model::init(arch, derive_seed({config.seed, 0x9106ULL}));
}

}  // namespace

FederationEngine::FederationEngine(const Dataset& train, const Dataset& test, std::vector<ClientShard> shards,
                                   FederationConfig config)
    : train_(train),
      test_(test),
      shards_(std::move(shards)),
      config_(std::move(config)),
      global_(initial_model(train, config_)),
      aggregator_(config_.strategy) {
  config_.validate();
  if (shards_.empty()) throw std::invalid_argument("FederationEngine: no clients");
  validate_partition(shards_, train_.size());
  if (test_.feature_count() != train_.feature_count())
    throw std::invalid_argument("FederationEngine: train/test feature counts differ");
  if (config_.persist_optimizer_state) optimizers_.resize(shards_.size());
}

RoundRecord FederationEngine::run_round(const RoundHooks& hooks) {
  const auto started = std::chrono::steady_clock::now();
  const std::size_t round = ++round_;
  const std::size_t k = shards_.size();
  const ParamSet snapshot = global_.extract_params();

  LocalTraining base;
  base.epochs = config_.local_epochs;
  base.batch_size = config_.batch_size;
  base.adam.lr = config_.lr;
  if (config_.strategy.kind == StrategyKind::fedprox) base.prox = ProxTerm{snapshot, config_.strategy.fedprox_mu};

  std::vector<ClientUpdate> updates(k);
  std::vector<double> losses(k, 0.0);
  std::vector<std::exception_ptr> failures(k);
#pragma omp parallel for schedule(dynamic) if (config_.parallel_clients && k > 1)
  for (std::size_t c = 0; c < k; ++c) {
    try {
      Model local = global_;
      ParamSet start = snapshot;
      if (hooks.on_client_start) {
#pragma omp critical(fkan_round_hooks)
        hooks.on_client_start(c, start);
      }
      local.assign_params(start);
      LocalTraining opts = base;
      opts.stream_seed = client_stream_seed(config_.seed, round, shards_[c].client_id);
      AdamState* adam = config_.persist_optimizer_state ? &optimizers_[c] : nullptr;
      ClientResult r = train_on_client(local, train_, shards_[c].indices, opts, adam);
      updates[c] = {std::move(r.params), shards_[c].indices.size()};
      losses[c] = r.train_loss;
    } catch (...) {
      failures[c] = std::current_exception();
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (!failures[c]) continue;
    try {
      std::rethrow_exception(failures[c]);
    } catch (const std::exception& e) {
      throw std::runtime_error("round " + std::to_string(round) + ", client " + std::to_string(c) + ": " + e.what());
    }
  }

  global_.assign_params(aggregator_.aggregate(updates, snapshot));
  const Evaluation eval = evaluate(global_, test_);
  RoundRecord rec;
  rec.round = round;
  rec.global_test_accuracy = eval.accuracy;
  rec.global_test_loss = eval.loss;
  rec.per_client_train_loss = std::move(losses);
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

std::vector<RoundRecord> FederationEngine::run() {
  std::vector<RoundRecord> records;
  while (round_ < config_.num_rounds) records.push_back(run_round());
  return records;
}

FederationResult run_federation(const Dataset& train, const Dataset& test, const std::vector<ClientShard>& shards,
                                const FederationConfig& config) {
  FederationEngine engine(train, test, shards, config);
  FederationResult r;
  r.records = engine.run();
  r.final_params = engine.global_model().extract_params();
  r.architecture = engine.global_model().architecture();
  return r;
}

}  // namespace fkan
