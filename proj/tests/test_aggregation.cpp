#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fkan/aggregation.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fkan;

namespace {

ParamSet vec(std::vector<double> values) {
  ParamSet p;
  const std::size_t n = values.size();
  p.add("w", Matrix(1, n, std::move(values)));
  return p;
}

std::vector<ClientUpdate> scalars(std::vector<double> values, std::vector<std::size_t> counts = {}) {
  std::vector<ClientUpdate> out;
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back({vec({values[i]}), counts.empty() ? 1 : counts[i]});
  return out;
}

double only(const ParamSet& p) { return p.tensor(0)(0, 0); }

std::vector<ClientUpdate> random_clients(Rng& rng, std::size_t k, const ParamSet& like, bool ties = false) {
  std::vector<ClientUpdate> out;
  for (std::size_t i = 0; i < k; ++i)
    out.push_back({ties ? testing::resample_with_ties(rng, like) : testing::resample(rng, like),
                   testing::random_size(rng, 1, 50)});
  return out;
}

std::vector<ClientUpdate> shuffled(Rng& rng, std::vector<ClientUpdate> clients) {
  rng.shuffle(clients);
  return clients;
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(strategy_names().size() == 7);
  for (const auto& n : strategy_names()) CHECK(to_string(parse_strategy(n)) == n);
  CHECK_THROWS_WITH_AS(parse_strategy("trimed_mean"), doctest::Contains("trimmed_mean"), std::invalid_argument);
  StrategyConfig c;
  c.trim_fraction = 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.momentum_mu = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  CHECK(c.resolved_krum_f(3) == 0);
  CHECK(c.resolved_krum_f(5) == 1);
  CHECK(c.resolved_krum_f(10) == 3);
  CHECK(c.resolved_krum_f(20) == 8);
}

TEST_CASE("average examples") {
  CHECK(only(aggregate_average(scalars({0.0, 4.0}, {1, 3}))) == 3.0);
  CHECK(only(aggregate_average(scalars({0.0, 4.0}, {1, 3}), false)) == 2.0);
  Rng rng(1);
  const ParamSet p = testing::random_params(rng);
  ParamSet neg = p;
  for (std::size_t e = 0; e < neg.entry_count(); ++e)
    for (double& v : neg.tensor(e).data()) v = -v;
  const std::vector<ClientUpdate> pair = {{p, 7}, {neg, 7}};
  CHECK(aggregate_average(pair) == p.zeros_like());
  const std::vector<ClientUpdate> one = {{p, 3}};
  CHECK(aggregate_average(one) == p);
  CHECK_THROWS_AS(aggregate_average(std::vector<ClientUpdate>{}), std::invalid_argument);
  const std::vector<ClientUpdate> mismatched = {{vec({1.0}), 1}, {vec({1.0, 2.0}), 1}};
  CHECK_THROWS_AS(aggregate_average(mismatched), std::invalid_argument);
}

TEST_CASE("median examples") {
  CHECK(only(aggregate_median(scalars({5.0, 1.0, 3.0}))) == 3.0);
  CHECK(only(aggregate_median(scalars({1.0, 3.0}))) == 2.0);
  Rng rng(2);
  const ParamSet like = vec(std::vector<double>(7, 0.0));
  const auto clients = random_clients(rng, 5, like);
  std::vector<double> expect(7);
  for (std::size_t d = 0; d < 7; ++d) {
    auto col = testing::column(clients, d);
    std::sort(col.begin(), col.end());
    expect[d] = col[2];
  }
  CHECK(aggregate_median(clients).flatten() == expect);
}

TEST_CASE("trimmed mean examples") {
  CHECK(only(aggregate_trimmed_mean(scalars({0.0, 10.0, 10.0, 100.0}), 0.25)) == 10.0);
  Rng rng(3);
  const ParamSet like = testing::random_params(rng);
  const auto clients = random_clients(rng, 4, like);
  CHECK(aggregate_trimmed_mean(clients, 0.2) == aggregate_average(clients, false));
  const auto seven = random_clients(rng, 7, like);
  std::vector<double> expect(like.scalar_count());
  for (std::size_t d = 0; d < expect.size(); ++d) {
    auto col = testing::column(seven, d);
    std::sort(col.begin(), col.end());
    expect[d] = std::clamp((col[1] + col[2] + col[3] + col[4] + col[5]) / 5.0, col[1], col[5]);
  }
  CHECK(aggregate_trimmed_mean(seven, 0.2).flatten() == expect);
  CHECK_THROWS_AS(aggregate_trimmed_mean(scalars({1.0, 2.0}), 0.5), std::invalid_argument);
}

TEST_CASE("momentum examples") {
  const ParamSet zero = vec({0.0});
  SUBCASE("constant unit delta: 1 then 2.9") {
    ServerMomentumState s;
    auto r1 = aggregate_momentum(scalars({1.0}), zero, s, 0.9);
    CHECK(only(r1.params) == 1.0);
    auto r2 = aggregate_momentum(scalars({2.0}), r1.params, r1.state, 0.9);
    CHECK(only(r2.params) == doctest::Approx(2.9).epsilon(1e-15));
    CHECK(only(r2.state.velocity) == doctest::Approx(1.9).epsilon(1e-15));
  }
  SUBCASE("zero velocity or mu = 0 reduces to the average") {
    Rng rng(4);
    const ParamSet like = testing::random_params(rng);
    const auto clients = random_clients(rng, 4, like);
    const ParamSet g = testing::resample(rng, like);
    CHECK(aggregate_momentum(clients, g, {}, 0.7).params == aggregate_average(clients));
    ServerMomentumState warm{testing::resample(rng, like)};
    CHECK(aggregate_momentum(clients, g, warm, 0.0).params == aggregate_average(clients));
    CHECK(aggregate_nesterov(clients, g, warm, 0.0).params == aggregate_average(clients));
  }
  SUBCASE("nesterov lookahead: 1.9") {
    auto r = aggregate_nesterov(scalars({1.0}), zero, {}, 0.9);
    CHECK(only(r.state.velocity) == 1.0);
    CHECK(only(r.params) == doctest::Approx(1.9).epsilon(1e-15));
  }
  SUBCASE("velocity must match the global shape") {
    ServerMomentumState bad{vec({1.0, 2.0})};
    CHECK_THROWS_AS(aggregate_momentum(scalars({1.0}), zero, bad, 0.9), std::invalid_argument);
  }
}

TEST_CASE("momentum and nesterov track scalar recurrences over several rounds") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double mu = rng.uniform(0.0, 0.99);
    const bool lookahead = trial % 2;
    double w = rng.normal(), v = 0.0;
    ParamSet g = vec({w});
    ServerMomentumState s;
    for (int round = 0; round < 5; ++round) {
      const auto clients = scalars({rng.normal(), rng.normal(), rng.normal()}, {1, 2, 3});
      const double avg = testing::average_oracle(clients, true)[0];
      const double delta = avg - w;
      v = mu * v + delta;
      w = lookahead ? w + mu * v + delta : w + v;
      auto r = lookahead ? aggregate_nesterov(clients, g, s, mu) : aggregate_momentum(clients, g, s, mu);
      CHECK(only(r.params) == doctest::Approx(w).epsilon(1e-12));
      g = r.params;
      s = r.state;
      w = only(g);
    }
  }
}

TEST_CASE("krum examples") {
  std::vector<ClientUpdate> c = {{vec({0.0, 0.0}), 1}, {vec({0.1, 0.0}), 1}, {vec({0.0, 0.1}), 1}, {vec({10.0, 10.0}), 1}};
  const KrumResult r = krum_select(c, 1);
  CHECK(r.index == 0);
  CHECK(r.params == c[0].params);
  CHECK(r.scores[0] == doctest::Approx(0.01));
  CHECK(r.scores[1] == doctest::Approx(0.01));
  CHECK(r.scores[2] == doctest::Approx(0.01));
  CHECK(r.scores[3] >= 196.0);
  const std::vector<ClientUpdate> same(4, {vec({1.0, 2.0}), 1});
  CHECK(krum_select(same, 1).index == 0);
  CHECK_THROWS_WITH_AS(krum_select(same, 2), doctest::Contains("f + 3"), std::invalid_argument);
}

TEST_CASE("fedprox examples") {
  CHECK(fedprox_proximal_term(vec({2.0}), vec({0.0}), 0.1) == doctest::Approx(0.2));
  CHECK(only(fedprox_gradient(vec({2.0}), vec({0.0}), 0.1)) == doctest::Approx(0.2));
  CHECK(fedprox_local_loss(1.5, vec({2.0}), vec({0.0}), 0.1) == doctest::Approx(1.7));
  Rng rng(6);
  const ParamSet p = testing::random_params(rng);
  CHECK(fedprox_proximal_term(p, p, 0.5) == 0.0);
  CHECK(fedprox_gradient(p, p, 0.5) == p.zeros_like());
}

TEST_CASE("property: permutation invariance is exact") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const ParamSet like = testing::random_params(rng);
    const auto clients = random_clients(rng, testing::random_size(rng, 1, 12), like, trial % 3 == 0);
    const auto perm = shuffled(rng, clients);
    CHECK(aggregate_average(perm) == aggregate_average(clients));
    CHECK(aggregate_average(perm, false) == aggregate_average(clients, false));
    CHECK(aggregate_median(perm) == aggregate_median(clients));
    CHECK(aggregate_trimmed_mean(perm, 0.2) == aggregate_trimmed_mean(clients, 0.2));
    if (clients.size() >= 3) {
      // Krum's choice is a set property; only the index moves.
      const auto a = krum_select(clients, 0), b = krum_select(perm, 0);
      std::vector<double> sa = a.scores, sb = b.scores;
      std::sort(sa.begin(), sa.end());
      std::sort(sb.begin(), sb.end());
      CHECK(sa == sb);
    }
  }
}

TEST_CASE("property: robust outputs stay inside the client bounding box") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const ParamSet like = testing::random_params(rng);
    const auto clients = random_clients(rng, testing::random_size(rng, 1, 15), like, trial % 2 == 0);
    const double beta = rng.uniform(0.0, 0.49);
    const auto med = aggregate_median(clients).flatten();
    const auto tm = aggregate_trimmed_mean(clients, beta).flatten();
    const auto avg = aggregate_average(clients).flatten();
    for (std::size_t d = 0; d < med.size(); ++d) {
      const auto col = testing::column(clients, d);
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      CHECK((*lo <= med[d] && med[d] <= *hi));
      CHECK((*lo <= tm[d] && tm[d] <= *hi));
      CHECK((*lo <= avg[d] && avg[d] <= *hi));
    }
  }
}

TEST_CASE("property: K = 1 returns the lone client exactly") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const ParamSet like = testing::random_params(rng);
    const auto one = random_clients(rng, 1, like);
    const ParamSet g = testing::resample(rng, like);
    CHECK(aggregate_average(one) == one[0].params);
    CHECK(aggregate_median(one) == one[0].params);
    CHECK(aggregate_trimmed_mean(one, rng.uniform(0.0, 0.49)) == one[0].params);
    CHECK(aggregate_momentum(one, g, {}, rng.uniform(0.0, 0.99)).params == one[0].params);
    CHECK(aggregate_nesterov(one, g, {}, 0.0).params == one[0].params);
    for (StrategyKind kind : {StrategyKind::average, StrategyKind::median, StrategyKind::trimmed_mean,
                              StrategyKind::momentum, StrategyKind::fedprox}) {
      Aggregator agg({kind});
      CHECK(agg.aggregate(one, g) == one[0].params);
    }
  }
}

TEST_CASE("property: t = 0 trimmed mean equals the unweighted average") {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const ParamSet like = testing::random_params(rng);
    const std::size_t k = testing::random_size(rng, 1, 4);
    const auto clients = random_clients(rng, k, like);
    // floor(0.2 K) = 0 for K < 5
    CHECK(aggregate_trimmed_mean(clients, 0.2) == aggregate_average(clients, false));
  }
}

TEST_CASE("property: brute-force oracles agree exactly") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const ParamSet like = vec(std::vector<double>(testing::random_size(rng, 1, 12), 0.0));
    const std::size_t k = testing::random_size(rng, 1, 6);
    const auto clients = random_clients(rng, k, like, trial % 4 == 0);
    CHECK(aggregate_median(clients).flatten() == testing::median_oracle(clients));
    for (double beta : {0.0, 0.2, 0.34}) {
      const auto t = static_cast<std::size_t>(std::floor(beta * static_cast<double>(k)));
      if (2 * t >= k) continue;
      CHECK(aggregate_trimmed_mean(clients, beta).flatten() == testing::trimmed_mean_oracle(clients, t));
    }
    for (std::size_t f = 0; k >= 3 && f + 3 <= k; ++f) {
      const KrumResult r = krum_select(clients, f);
      CHECK(r.scores == testing::krum_scores_oracle(clients, f));
      CHECK(r.index == testing::krum_oracle(clients, f));
    }
    const auto avg = aggregate_average(clients).flatten();
    const auto expect = testing::average_oracle(clients, true);
    for (std::size_t d = 0; d < avg.size(); ++d) CHECK(avg[d] == doctest::Approx(expect[d]).epsilon(1e-12));
  }
}

TEST_CASE("property: a single x100 client cannot capture robust strategies") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const ParamSet like = testing::random_params(rng);
    auto clients = random_clients(rng, 10, like);
    const std::size_t bad = rng.index(10);
    std::vector<ClientUpdate> honest;
    for (std::size_t i = 0; i < 10; ++i)
      if (i != bad) honest.push_back(clients[i]);
    for (std::size_t e = 0; e < like.entry_count(); ++e)
      for (double& v : clients[bad].params.tensor(e).data()) v *= 100.0;
    CHECK(krum_select(clients, 3).index != bad);
    const auto med = aggregate_median(clients).flatten();
    const auto tm = aggregate_trimmed_mean(clients, 0.2).flatten();
    for (std::size_t d = 0; d < med.size(); ++d) {
      const auto col = testing::column(honest, d);
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      CHECK((*lo <= med[d] && med[d] <= *hi));
      CHECK((*lo <= tm[d] && tm[d] <= *hi));
    }
  }
}

TEST_CASE("Aggregator threads momentum state and records the Krum pick") {
  StrategyConfig c;
  c.kind = StrategyKind::momentum;
  Aggregator agg(c);
  ParamSet g = vec({0.0});
  g = agg.aggregate(scalars({1.0}), g);
  g = agg.aggregate(scalars({2.0}), g);
  CHECK(only(g) == doctest::Approx(2.9));
  agg.reset();
  CHECK(agg.state().velocity.entry_count() == 0);

  c.kind = StrategyKind::krum;
  Aggregator krum(c);
  std::vector<ClientUpdate> pts = {{vec({10.0}), 1}, {vec({0.0}), 1}, {vec({0.1}), 1}, {vec({0.2}), 1}, {vec({0.3}), 1}};
  CHECK(only(krum.aggregate(pts, vec({0.0}))) != 10.0);
  REQUIRE(krum.last_krum_index());
  CHECK(*krum.last_krum_index() != 0);
}
