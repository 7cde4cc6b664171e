// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Full-size training runs on the default world.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>

#include "usd/config.hpp"
#include "usd/metrics.hpp"
#include "usd/sampling.hpp"
#include "usd/trainer.hpp"
#include "usd/world.hpp"

using namespace usd;

TEST_CASE("usd on the default world: loss falls, time budget, oracle bound") {
  const ExperimentConfig base;
  const World world = generate_world(base.world, base.world.seed);
  const Dataset ds = simulate_world(world);

  // The true click probability ranks each user's held-out exposures at
  // least as well as any trained model.
  const DataSplit split = split_dataset(ds, base.eval.eval_days);
  std::vector<ScoredExposure> oracle_scored;
  for (const auto& r : sample_confident(split.eval_exposures, split.eval_contexts)) {
    oracle_scored.push_back(
        {r.user_id, r.label, oracle::item_click_probability(world.users[r.user_id], world.items[r.item_id])});
  }
  const double oracle_gauc = evaluate(oracle_scored).gauc_avg;

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    INFO("seed " << seed);
    ExperimentConfig c = base;
    c.train.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult r = Trainer(ds, c).run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 300.0);

    const std::size_t e = r.steps_per_epoch;
    REQUIRE(r.losses.size() == c.train.epochs * e);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < e; ++i) {
      first += r.losses[i].l_ctr;
      last += r.losses[r.losses.size() - e + i].l_ctr;
    }
    CHECK(last < first);

    const double trained = evaluate_params(r.params, ds, c).gauc_avg;
    CHECK(oracle_gauc >= trained);
    MESSAGE("seed " << seed << ": first/last epoch-mean L'_ctr " << first / e << " / " << last / e
                    << ", gauc_avg " << trained << " (oracle " << oracle_gauc << "), " << secs << "s");
  }
}
