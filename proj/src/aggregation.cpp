#include "fkan/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fkan/kernels.hpp"

namespace fkan {

namespace {

const ParamSet& require_clients(std::span<const ClientUpdate> clients, const char* op) {
  if (clients.empty()) throw std::invalid_argument(std::string(op) + ": no clients");
  const ParamSet& first = clients.front().params;
  for (std::size_t k = 1; k < clients.size(); ++k) first.require_congruent(clients[k].params, op);
  return first;
}

kernels::ClientStack stack_clients(std::span<const ClientUpdate> clients) {
  const std::size_t dims = clients.front().params.scalar_count();
  kernels::ClientStack stack(clients.size(), dims);
  for (std::size_t k = 0; k < clients.size(); ++k) {
    std::size_t offset = 0;
    for (const auto& e : clients[k].params.entries()) {
      std::copy(e.tensor.data().begin(), e.tensor.data().end(), stack.row(k).begin() + static_cast<long>(offset));
      offset += e.tensor.size();
    }
  }
  return stack;
}

std::vector<double> mean_vector(std::span<const ClientUpdate> clients, bool sample_weighted) {
  const auto stack = stack_clients(clients);
  if (!sample_weighted) return kernels::omp::coordinate_trimmed_mean(stack, 0);
  double total = 0.0;
  for (const auto& c : clients) total += static_cast<double>(c.sample_count);
  if (!(total > 0.0)) throw std::invalid_argument("aggregate_average: all sample counts are zero");
  std::vector<double> weights;
  for (const auto& c : clients) weights.push_back(static_cast<double>(c.sample_count) / total);
  auto mean = kernels::omp::weighted_sorted_sum(stack, weights);
  // A convex combination cannot leave the client range; clamp away rounding.
  for (std::size_t d = 0; d < mean.size(); ++d) {
    double lo = stack(0, d), hi = stack(0, d);
    for (std::size_t k = 1; k < stack.rows(); ++k) {
      lo = std::min(lo, stack(k, d));
      hi = std::max(hi, stack(k, d));
    }
    mean[d] = std::clamp(mean[d], lo, hi);
  }
  return mean;
}

MomentumResult momentum_impl(std::span<const ClientUpdate> clients, const ParamSet& global,
                             const ServerMomentumState& state, double mu, bool weighted, bool lookahead) {
  const ParamSet& like = require_clients(clients, lookahead ? "aggregate_nesterov" : "aggregate_momentum");
  if (!(mu >= 0.0 && mu < 1.0)) throw std::invalid_argument("momentum: mu must lie in [0, 1)");
  like.require_congruent(global, "momentum(global)");
  const std::vector<double> avg = mean_vector(clients, weighted);
  const std::vector<double> w = global.flatten();
  std::vector<double> v_old = state.velocity.entry_count() == 0 ? std::vector<double>(w.size(), 0.0)
                                                                 : state.velocity.flatten();
  if (v_old.size() != w.size()) throw std::invalid_argument("momentum: velocity does not match global parameters");
  std::vector<double> v_new(w.size()), out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double delta = avg[i] - w[i];
    v_new[i] = mu * v_old[i] + delta;
    // w + v_new == avg + mu v_old, and w + mu v_new + delta == avg + mu v_new;
    // anchoring on avg keeps zero-velocity rounds exactly equal to FedAvg.
    out[i] = avg[i] + mu * (lookahead ? v_new[i] : v_old[i]);
  }
  return {like.unflatten(out), {like.unflatten(v_new)}};
}

}  // namespace

std::string to_string(StrategyKind kind) { return strategy_names()[static_cast<std::size_t>(kind)]; }

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = {"average", "median",   "trimmed_mean", "momentum",
                                                 "nesterov", "krum", "fedprox"};
  return names;
}

StrategyKind parse_strategy(const std::string& name) {
  const auto& names = strategy_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<StrategyKind>(i);
  std::string valid;
  for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown strategy '" + name + "' (valid: " + valid + ")");
}

void StrategyConfig::validate() const {
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) throw std::invalid_argument("trim_fraction must lie in [0, 0.5)");
  if (!(momentum_mu >= 0.0 && momentum_mu < 1.0)) throw std::invalid_argument("momentum_mu must lie in [0, 1)");
  if (!(fedprox_mu >= 0.0)) throw std::invalid_argument("fedprox_mu must be non-negative");
}

std::size_t StrategyConfig::resolved_krum_f(std::size_t clients) const {
  if (krum_f) return *krum_f;
  return clients >= 3 ? (clients - 3) / 2 : 0;
}

ParamSet aggregate_average(std::span<const ClientUpdate> clients, bool sample_weighted) {
  const ParamSet& like = require_clients(clients, "aggregate_average");
  return like.unflatten(mean_vector(clients, sample_weighted));
}

ParamSet aggregate_median(std::span<const ClientUpdate> clients) {
  const ParamSet& like = require_clients(clients, "aggregate_median");
  return like.unflatten(kernels::omp::coordinate_median(stack_clients(clients)));
}

ParamSet aggregate_trimmed_mean(std::span<const ClientUpdate> clients, double trim_fraction) {
  const ParamSet& like = require_clients(clients, "aggregate_trimmed_mean");
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) throw std::invalid_argument("aggregate_trimmed_mean: trim_fraction must lie in [0, 0.5)");
  const auto trim = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(clients.size())));
  if (2 * trim >= clients.size()) {
    throw std::invalid_argument("aggregate_trimmed_mean: trimming " + std::to_string(trim) +
                                " per side leaves nothing of " + std::to_string(clients.size()) + " clients");
  }
  return like.unflatten(kernels::omp::coordinate_trimmed_mean(stack_clients(clients), trim));
}

MomentumResult aggregate_momentum(std::span<const ClientUpdate> clients, const ParamSet& global,
                                  const ServerMomentumState& state, double mu, bool sample_weighted) {
  return momentum_impl(clients, global, state, mu, sample_weighted, false);
}

MomentumResult aggregate_nesterov(std::span<const ClientUpdate> clients, const ParamSet& global,
                                  const ServerMomentumState& state, double mu, bool sample_weighted) {
  return momentum_impl(clients, global, state, mu, sample_weighted, true);
}

KrumResult krum_select(std::span<const ClientUpdate> clients, std::size_t f) {
  require_clients(clients, "krum_select");
  const std::size_t k = clients.size();
  if (k < f + 3) {
    throw std::invalid_argument("krum_select: K = " + std::to_string(k) + " is too small for f = " +
                                std::to_string(f) + " (need K >= f + 3)");
  }
  const std::size_t neighbours = k - f - 2;
  const Matrix dist = kernels::omp::pairwise_sq_distances(stack_clients(clients));
  KrumResult r;
  r.scores.resize(k);
  std::vector<double> row;
  for (std::size_t i = 0; i < k; ++i) {
    row.clear();
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) row.push_back(dist(i, j));
    std::sort(row.begin(), row.end());
    double s = 0.0;
    for (std::size_t m = 0; m < neighbours; ++m) s += row[m];
    r.scores[i] = s;
    if (s < r.scores[r.index]) r.index = i;
  }
  r.params = clients[r.index].params;
  return r;
}

double fedprox_proximal_term(const ParamSet& w, const ParamSet& w_global, double mu) {
  w.require_congruent(w_global, "fedprox_proximal_term");
  double sq = 0.0;
  for (std::size_t e = 0; e < w.entry_count(); ++e) {
    const auto& a = w.tensor(e).data();
    const auto& b = w_global.tensor(e).data();
    for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return 0.5 * mu * sq;
}

ParamSet fedprox_gradient(const ParamSet& w, const ParamSet& w_global, double mu) {
  w.require_congruent(w_global, "fedprox_gradient");
  ParamSet g = w.zeros_like();
  for (std::size_t e = 0; e < w.entry_count(); ++e) {
    const auto& a = w.tensor(e).data();
    const auto& b = w_global.tensor(e).data();
    auto& out = g.tensor(e).data();
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = mu * (a[i] - b[i]);
  }
  return g;
}

Aggregator::Aggregator(StrategyConfig config) : config_(std::move(config)) { config_.validate(); }

ParamSet Aggregator::aggregate(std::span<const ClientUpdate> clients, const ParamSet& global) {
  last_krum_.reset();
  switch (config_.kind) {
    case StrategyKind::average:
    case StrategyKind::fedprox:
      return aggregate_average(clients, config_.sample_weighted);
    case StrategyKind::median:
      return aggregate_median(clients);
    case StrategyKind::trimmed_mean:
      return aggregate_trimmed_mean(clients, config_.trim_fraction);
    case StrategyKind::momentum:
    case StrategyKind::nesterov: {
      auto r = config_.kind == StrategyKind::momentum
                   ? aggregate_momentum(clients, global, state_, config_.momentum_mu, config_.sample_weighted)
                   : aggregate_nesterov(clients, global, state_, config_.momentum_mu, config_.sample_weighted);
      state_ = std::move(r.state);
      return std::move(r.params);
    }
    case StrategyKind::krum: {
      auto r = krum_select(clients, config_.resolved_krum_f(clients.size()));
      last_krum_ = r.index;
      return std::move(r.params);
    }
  }
  throw std::logic_error("Aggregator: unhandled strategy");
}

}  // namespace fkan
