// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Training and evaluation of one ablation arm.
//
// The last eval_days days of the dataset are held out. Training uses label
// days before them. Per step one CTR mini-batch from the variant's set and one
// UIEM mini-batch from the UIEM set (contexts with r_p = 1) form
//
//   final = L'_ctr + alpha L_portal + beta L_block.
//
// Debias weights come from a separate UIEM forward pass and enter L'_ctr as
// constants, so the CTR loss never moves UIEM parameters.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "usd/config.hpp"
#include "usd/ctr_model.hpp"
#include "usd/metrics.hpp"
#include "usd/sampling.hpp"
#include "usd/uiem.hpp"

namespace usd {

struct DataSplit {
  std::uint32_t first_eval_day = 0;
  std::vector<ExposureRecord> train_exposures;  // label days before first_eval_day
  std::vector<UserDayContext> train_contexts;
  std::vector<ExposureRecord> eval_exposures;
  std::vector<UserDayContext> eval_contexts;
};

// Throws ConfigError if no label day is left for training.
DataSplit split_dataset(const Dataset& ds, std::size_t eval_days);

struct WeightPolicy {
  bool portal = false;  // 1/(1 - y_hat_p) on portal-cohort user-days
  bool block = false;   // 1/y_hat_b on block-cohort user-days
  bool any() const noexcept { return portal || block; }
};

WeightPolicy weight_policy(Variant v);

struct VariantSets {
  std::vector<ExposureRecord> ctr_set;
  std::vector<UserDayContext> uiem_set;
};

// base: every training exposure; wo_ps: block-click user-days; all others:
// portal-visit user-days. Throws ConfigError when the CTR set is empty or a
// weighted variant has no UIEM training data.
VariantSets variant_sets(const DataSplit& split, Variant v);

struct LossRow {
  std::size_t step = 0;
  double l_ctr = 0.0;
  double l_portal = 0.0;
  double l_block = 0.0;
  double l_final = 0.0;
};

struct TrainResult {
  ParameterSet params;  // "uiem.*" followed by "ctr.*"
  std::vector<LossRow> losses;
  std::size_t ctr_rows = 0;
  std::size_t uiem_rows = 0;
  std::size_t steps_per_epoch = 0;
};

// Per-row debias weights for a CTR batch under `policy`, evaluating the UIEM
// once per distinct user-day.
std::vector<double> batch_weights(std::span<const ExposureRecord> rows, const ContextIndex& contexts,
                                  const Uiem& uiem, const ParameterSet& params, WeightPolicy policy,
                                  ClipRange clip);

class Trainer {
 public:
  Trainer(const Dataset& ds, const ExperimentConfig& config);

  const Uiem& uiem() const noexcept { return uiem_; }
  const CtrModel& ctr() const noexcept { return ctr_; }
  const DataSplit& split() const noexcept { return split_; }

  ParameterSet init() const;
  TrainResult run();

 private:
  void pretrain(ParameterSet& params, const VariantSets& sets);

  ExperimentConfig config_;
  DataSplit split_;
  ClickHistory history_;
  Uiem uiem_;
  CtrModel ctr_;
};

// Scores the held-out days with the CTR parameters in `params` and computes
// the metrics. Which exposures count depends on config.eval.set.
MetricsReport evaluate_params(const ParameterSet& params, const Dataset& ds, const ExperimentConfig& config);

}  // namespace usd
