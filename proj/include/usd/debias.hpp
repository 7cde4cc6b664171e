// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Dual inverse-propensity weights, the weighted CTR loss, the joint
// objective, and the decayed-accumulator Adagrad optimizer.
//
//   portal cohort (visited, no block click):  w = clip(1 / (1 - y_hat_p))
//   block cohort (clicked the block):         w = clip(1 / y_hat_b)
//
//   L'    = (1/n) sum_i w_i e(y_i, y_hat_i)
//   final = L' + alpha L_portal + beta L_block

#pragma once

#include <span>
#include <string>

#include "usd/graph.hpp"
#include "usd/sampling.hpp"

namespace usd {

struct ClipRange {
  double lo = 1.0;
  double hi = 15.0;
};

double debias_weight(Cohort cohort, double y_hat_p, double y_hat_b, ClipRange clip);

// Scalar reference of the weighted loss on precomputed per-sample errors.
double ctr_debias_loss(std::span<const double> weights, std::span<const double> errors);

// Same loss from labels and predictions (predictions are clamped).
double ctr_debias_loss(std::span<const double> weights, std::span<const double> labels,
                       std::span<const double> predictions);

double final_loss(double l_ctr, double l_portal, double l_block, double alpha, double beta);

struct AdagradOptions {
  double learning_rate = 0.01;
  double decay = 0.9999;
  double epsilon = 1e-8;
  double accumulator_init = 0.1;
};

// acc <- decay * acc + g^2;  theta <- theta - lr * g / (sqrt(acc) + eps)
class AdagradDecay {
 public:
  AdagradDecay(const ParameterSet& params, AdagradOptions options);

  // Updates every parameter that has a same-named gradient. Throws
  // NumericError naming the parameter if any gradient is non-finite; no
  // parameter is modified in that case.
  void step(ParameterSet& params, const Gradients& grads);

  const ParameterSet& accumulators() const noexcept { return acc_; }
  const AdagradOptions& options() const noexcept { return options_; }

 private:
  AdagradOptions options_;
  ParameterSet acc_;
};

}  // namespace usd
