// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "usd/debias.hpp"
#include "usd/error.hpp"
#include "usd/losses.hpp"
#include "usd/rng.hpp"
#include "usd/trainer.hpp"

using namespace usd;

TEST_CASE("debias weight examples") {
  const ClipRange clip{1.0, 15.0};
  CHECK(debias_weight(Cohort::portal, 0.5, 0.3, clip) == 2.0);
  CHECK(debias_weight(Cohort::block, 0.9, 0.05, clip) == 15.0);
  CHECK(debias_weight(Cohort::portal, 0.01, 0.3, clip) == doctest::Approx(1.0 / 0.99).epsilon(1e-15));
  CHECK(debias_weight(Cohort::portal, 0.01, 0.3, clip) == doctest::Approx(1.0101).epsilon(1e-4));
  CHECK(debias_weight(Cohort::block, 0.2, 0.25, clip) == 4.0);
  // Extreme estimates are absorbed by the clip range.
  CHECK(debias_weight(Cohort::portal, 1.0, 0.3, clip) == 15.0);
  CHECK(debias_weight(Cohort::block, 0.3, 0.0, clip) == 15.0);
  CHECK(debias_weight(Cohort::block, 0.3, 1.0, clip) == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("debias weights are monotone before clipping and always inside the clip range") {
  const ClipRange wide{1.0, 1e15};
  double prev_portal = 0.0, prev_block = 1e300;
  for (int i = 1; i < 1000; ++i) {
    const double y = i / 1000.0;
    const double wp = debias_weight(Cohort::portal, y, 0.5, wide);
    const double wb = debias_weight(Cohort::block, 0.5, y, wide);
    CHECK(wp >= prev_portal);
    CHECK(wb <= prev_block);
    prev_portal = wp;
    prev_block = wb;
  }
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double lo = 1.0 + 3.0 * rng.uniform();
    const ClipRange clip{lo, lo + 20.0 * rng.uniform()};
    const Cohort c = rng.bernoulli(0.5) ? Cohort::portal : Cohort::block;
    const double w = debias_weight(c, rng.uniform(), rng.uniform(), clip);
    REQUIRE(w >= clip.lo);
    REQUIRE(w <= clip.hi);
  }
}

TEST_CASE("weighted CTR loss") {
  const double w[] = {2.0, 15.0}, e[] = {0.1, 0.2};
  CHECK(ctr_debias_loss(w, e) == doctest::Approx(1.6).epsilon(1e-15));
  CHECK_THROWS_AS(ctr_debias_loss(std::span<const double>{}, std::span<const double>{}), InputError);

  // Unit weights reduce to the plain mean cross-entropy.
  Rng rng(4);
  std::vector<double> ones(50, 1.0), labels(50), preds(50);
  double plain = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    labels[i] = rng.bernoulli(0.3);
    preds[i] = rng.uniform();
    plain += labels[i] == 1.0 ? -std::log(preds[i]) : -std::log(1.0 - preds[i]);
  }
  CHECK(ctr_debias_loss(ones, labels, preds) == doctest::Approx(plain / 50.0).epsilon(1e-14));

  // The graph op computes the same quantity.
  std::vector<double> ws(50);
  for (double& x : ws) x = 1.0 + 14.0 * rng.uniform();
  ParameterSet none;
  Graph g(none);
  const NodeId l = g.bce(g.constant(Tensor({50}, preds)), Tensor({50}, labels), Tensor({50}, ws));
  CHECK(g.value(l).item() == doctest::Approx(ctr_debias_loss(ws, labels, preds)).epsilon(1e-14));
}

TEST_CASE("final loss") {
  CHECK(final_loss(1.0, 0.7, 0.7, 1e-4, 1e-4) == doctest::Approx(1.00014).epsilon(1e-12));
  CHECK(std::abs(final_loss(1.0, 0.7, 0.7, 1e-4, 1e-4) - 1.00014) < 1e-12);
  CHECK(final_loss(0.8, 0.3, 0.9, 0.0, 0.0) == 0.8);
  // Linear in alpha with slope L_portal.
  const double h = 1e-3;
  CHECK((final_loss(0.8, 0.3, 0.9, 0.5 + h, 0.2) - final_loss(0.8, 0.3, 0.9, 0.5, 0.2)) / h ==
        doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("decayed Adagrad") {
  ParameterSet p;
  p.add("x", Tensor::scalar(1.0));
  SUBCASE("zero gradient leaves parameters unchanged") {
    AdagradDecay opt(p, {});
    Gradients g = p.zeros_like();
    opt.step(p, g);
    CHECK(p.get("x").item() == 1.0);
  }
  SUBCASE("hand-iterated pure Adagrad") {
    AdagradDecay opt(p, {0.01, 1.0, 1e-8, 0.0});
    Gradients g;
    g.add("x", Tensor::scalar(1.0));
    opt.step(p, g);
    CHECK(1.0 - p.get("x").item() == doctest::Approx(0.01).epsilon(1e-7));
    const double after_one = p.get("x").item();
    opt.step(p, g);
    CHECK(after_one - p.get("x").item() == doctest::Approx(0.01 / std::sqrt(2.0)).epsilon(1e-7));
    CHECK(opt.accumulators().get("x").item() == 2.0);
  }
  SUBCASE("accumulator decays") {
    AdagradDecay opt(p, {0.01, 0.5, 1e-8, 0.1});
    Gradients g;
    g.add("x", Tensor::scalar(2.0));
    opt.step(p, g);
    CHECK(opt.accumulators().get("x").item() == doctest::Approx(0.05 + 4.0).epsilon(1e-15));
  }
  SUBCASE("non-finite gradient names the parameter and changes nothing") {
    p.add("y", Tensor::scalar(3.0));
    AdagradDecay opt(p, {});
    Gradients g;
    g.add("y", Tensor::scalar(1.0));
    g.add("x", Tensor::scalar(std::nan("")));
    try {
      opt.step(p, g);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("'x'") == std::string::npos);
      CHECK(std::string(e.what()).find(" x") != std::string::npos);
    }
    CHECK(p.get("y").item() == 3.0);
  }
  SUBCASE("convex quadratic converges") {
    ParameterSet q;
    q.add("w", Tensor({2}, {3.0, -2.0}));
    AdagradDecay opt(q, {0.1, 0.9999, 1e-8, 0.1});
    const double a[] = {1.0, 4.0};
    double grad_norm = 1.0;
    std::size_t steps = 0;
    for (; steps < 10000 && grad_norm >= 1e-6; ++steps) {
      Gradients g;
      const Tensor& w = q.get("w");
      g.add("w", Tensor({2}, {a[0] * w[0], a[1] * w[1]}));
      grad_norm = std::hypot(g.get("w")[0], g.get("w")[1]);
      if (grad_norm < 1e-6) break;
      opt.step(q, g);
    }
    CHECK(grad_norm < 1e-6);
    MESSAGE("quadratic converged in " << steps << " steps");
  }
  SUBCASE("bad options") {
    CHECK_THROWS_AS(AdagradDecay(p, {0.0, 0.9, 1e-8, 0.1}), ConfigError);
    CHECK_THROWS_AS(AdagradDecay(p, {0.1, 1.5, 1e-8, 0.1}), ConfigError);
  }
}

namespace {

// Small world with enough days for one training label day and the held-out days.
Dataset small_dataset(std::size_t users, std::uint64_t seed) {
  WorldConfig c;
  c.users = users;
  c.items = 30;
  c.days = 50;
  return simulate_world(generate_world(c, seed));
}

ExperimentConfig small_config(Variant v) {
  ExperimentConfig c;
  c.world.items = 30;
  c.model.uiem.dim = 8;
  c.model.uiem.ffn = 16;
  c.model.ctr_dim = 8;
  c.model.ctr_hidden = 8;
  c.model.behavior_len = 5;
  c.train.variant = v;
  c.train.batch_size_ctr = 64;
  c.train.batch_size_uiem = 32;
  c.train.epochs = 1;
  c.eval.eval_days = 4;
  return c;
}

}  // namespace

TEST_CASE("CTR loss never reaches UIEM parameters") {
  const Dataset ds = small_dataset(80, 3);
  ExperimentConfig cfg = small_config(Variant::usd);
  Trainer tr(ds, cfg);
  const ParameterSet params = tr.init();
  const VariantSets sets = variant_sets(tr.split(), Variant::usd);
  const ContextIndex ctx(tr.split().train_contexts);
  const std::vector<ExposureRecord> rows(sets.ctr_set.begin(), sets.ctr_set.begin() + 40);
  const auto w = batch_weights(rows, ctx, tr.uiem(), params, weight_policy(Variant::usd), cfg.train.clip);
  bool any_weighted = false;
  for (double x : w) any_weighted |= x != 1.0;
  CHECK(any_weighted);

  const ClickHistory hist(ds.exposures);
  const CtrBatch b = make_batch(rows, hist, tr.ctr());
  Graph g(params);
  const NodeId l = g.bce(tr.ctr().forward(g, b), Tensor({40}, b.labels), Tensor({40}, w));
  const Gradients grads = g.backward(l);
  bool ctr_moves = false;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const bool is_uiem = grads.names()[i].starts_with("uiem.");
    for (double v : grads.at(i).values()) {
      if (is_uiem) REQUIRE(v == 0.0);
      ctr_moves |= !is_uiem && v != 0.0;
    }
  }
  CHECK(ctr_moves);
}

TEST_CASE("variant policies and sets") {
  CHECK_FALSE(weight_policy(Variant::base).any());
  CHECK_FALSE(weight_policy(Variant::wo_d).any());
  CHECK(weight_policy(Variant::usd).portal);
  CHECK(weight_policy(Variant::usd).block);
  CHECK_FALSE(weight_policy(Variant::wo_p).portal);
  CHECK(weight_policy(Variant::wo_p).block);
  CHECK(weight_policy(Variant::wo_b).portal);
  CHECK_FALSE(weight_policy(Variant::wo_b).block);

  const Dataset ds = small_dataset(60, 4);
  const DataSplit split = split_dataset(ds, 4);
  CHECK(split.first_eval_day == 46);
  for (const auto& r : split.train_exposures) {
    CHECK(r.day >= kFirstLabelDay);
    CHECK(r.day < 46);
  }
  CHECK(variant_sets(split, Variant::base).ctr_set == split.train_exposures);
  CHECK(variant_sets(split, Variant::usd).ctr_set == sample_confident(split.train_exposures, split.train_contexts));
  CHECK(variant_sets(split, Variant::wo_ps).ctr_set ==
        sample_block_clicks(split.train_exposures, split.train_contexts));
  CHECK_THROWS_AS(split_dataset(ds, 50 - kFirstLabelDay), ConfigError);

  // Identities on one batch: unit weights without a policy, and a [1, 1]
  // clip range under the full policy.
  Trainer tr(ds, small_config(Variant::usd));
  const auto params = tr.init();
  const ContextIndex ctx(split.train_contexts);
  const auto rows = variant_sets(split, Variant::usd).ctr_set;
  for (double w : batch_weights(rows, ctx, tr.uiem(), params, weight_policy(Variant::wo_d), {})) CHECK(w == 1.0);
  for (double w : batch_weights(rows, ctx, tr.uiem(), params, weight_policy(Variant::usd), {1.0, 1.0})) {
    CHECK(w == 1.0);
  }
  // Portal-only and block-only policies weight only their cohort.
  const auto wp = batch_weights(rows, ctx, tr.uiem(), params, weight_policy(Variant::wo_b), {});
  const auto wb = batch_weights(rows, ctx, tr.uiem(), params, weight_policy(Variant::wo_p), {});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool block = ctx.at(rows[i].user_id, rows[i].day).y_b == 1;
    if (block) CHECK(wp[i] == 1.0);
    if (!block) CHECK(wb[i] == 1.0);
  }
}

TEST_CASE("training runs") {
  const Dataset ds = small_dataset(120, 5);
  SUBCASE("zero epochs returns the initialization") {
    ExperimentConfig c = small_config(Variant::usd);
    c.train.epochs = 0;
    Trainer tr(ds, c);
    const TrainResult r = tr.run();
    CHECK(r.params == tr.init());
    CHECK(r.losses.empty());
  }
  SUBCASE("fixed seed gives identical loss curves") {
    const ExperimentConfig c = small_config(Variant::usd);
    const TrainResult a = Trainer(ds, c).run();
    const TrainResult b = Trainer(ds, c).run();
    REQUIRE(a.losses.size() == b.losses.size());
    for (std::size_t i = 0; i < a.losses.size(); ++i) {
      CHECK(a.losses[i].l_final == b.losses[i].l_final);
      CHECK(a.losses[i].l_final ==
            doctest::Approx(final_loss(a.losses[i].l_ctr, a.losses[i].l_portal, a.losses[i].l_block, 1e-4, 1e-4))
                .epsilon(1e-14));
    }
    CHECK(a.params == b.params);
  }
  SUBCASE("pretrain mode freezes the UIEM after its own phase") {
    ExperimentConfig c = small_config(Variant::usd);
    c.train.uiem_mode = UiemMode::pretrain;
    c.train.pretrain_epochs = 1;
    Trainer tr(ds, c);
    const TrainResult r = tr.run();
    const ParameterSet init = tr.init();
    CHECK(r.params.subset("uiem.") != init.subset("uiem."));
    CHECK(r.params.subset("ctr.") != init.subset("ctr."));
    // Freezing: a second CTR epoch does not move the UIEM.
    c.train.epochs = 2;
    const TrainResult r2 = Trainer(ds, c).run();
    CHECK(r2.params.subset("uiem.") == r.params.subset("uiem."));
  }
  SUBCASE("the base arm consumes every training exposure") {
    Trainer tr(ds, small_config(Variant::base));
    const TrainResult r = tr.run();
    CHECK(r.ctr_rows == tr.split().train_exposures.size());
  }
}
