#pragma once

// Centralised training written directly against the model and optimizer
// primitives: fresh Adam every `epochs` epochs, shuffles from the
// single-client stream of each round.

#include <algorithm>
#include <numeric>
#include <vector>

#include "fkan/federation.hpp"

namespace fkan::testing {

inline void centralized_round(Model& model, const Dataset& train, const FederationConfig& c, std::size_t round) {
  const std::size_t width = model.architecture().widths.back();
  AdamConfig ac;
  ac.lr = c.lr;
  AdamState adam(model.params(), ac);
  Rng rng(client_stream_seed(c.seed, round, 0));
  for (std::size_t epoch = 0; epoch < c.local_epochs; ++epoch) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t b = 0; b < order.size(); b += c.batch_size) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<long>(b),
                                         order.begin() + static_cast<long>(std::min(order.size(), b + c.batch_size)));
      const Dataset batch = train.subset(idx);
      const Model::Forward f = model.forward(batch.features);
      const ParamSet g = model.backward(f.cache, f.probs, encode_targets(batch.labels, width));
      model.assign_params(adam_step(adam, model.params(), g));
    }
  }
}

}  // namespace fkan::testing
