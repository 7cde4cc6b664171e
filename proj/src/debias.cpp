// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/debias.hpp"

#include <algorithm>
#include <cmath>

#include "usd/error.hpp"
#include "usd/kernels/kernels.hpp"
#include "usd/losses.hpp"

namespace usd {

double debias_weight(Cohort cohort, double y_hat_p, double y_hat_b, ClipRange clip) {
  const double raw = cohort == Cohort::portal ? 1.0 / (1.0 - clamp_prob(y_hat_p)) : 1.0 / clamp_prob(y_hat_b);
  return std::clamp(raw, clip.lo, clip.hi);
}

double ctr_debias_loss(std::span<const double> weights, std::span<const double> errors) {
  if (weights.empty()) throw InputError("ctr_debias_loss: empty batch");
  if (weights.size() != errors.size()) throw ShapeError("ctr_debias_loss: weights and errors differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) sum += weights[i] * errors[i];
  return sum / static_cast<double>(weights.size());
}

double ctr_debias_loss(std::span<const double> weights, std::span<const double> labels,
                       std::span<const double> predictions) {
  if (labels.size() != predictions.size()) throw ShapeError("ctr_debias_loss: labels and predictions differ in length");
  std::vector<double> errors(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) errors[i] = binary_cross_entropy(labels[i], predictions[i]);
  return ctr_debias_loss(weights, errors);
}

double final_loss(double l_ctr, double l_portal, double l_block, double alpha, double beta) {
  return l_ctr + alpha * l_portal + beta * l_block;
}

AdagradDecay::AdagradDecay(const ParameterSet& params, AdagradOptions options) : options_(options) {
  if (!(options_.learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (!(options_.decay > 0 && options_.decay <= 1)) throw ConfigError("decay must be in (0, 1]");
  if (!(options_.epsilon >= 0)) throw ConfigError("epsilon must be >= 0");
  if (!(options_.accumulator_init >= 0)) throw ConfigError("accumulator_init must be >= 0");
  acc_ = params.zeros_like();
  for (std::size_t i = 0; i < acc_.size(); ++i) acc_.at(i).fill(options_.accumulator_init);
}

void AdagradDecay::step(ParameterSet& params, const Gradients& grads) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const std::string& name = grads.names()[i];
    if (!grads.at(i).all_finite()) throw NumericError("non-finite gradient for parameter " + name);
    if (grads.at(i).shape() != params.get(name).shape()) {
      throw ShapeError("gradient shape " + shape_str(grads.at(i).shape()) + " differs from parameter " + name + " " +
                       shape_str(params.get(name).shape()));
    }
  }
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const std::string& name = grads.names()[i];
    Tensor& theta = params.get(name);
    Tensor& acc = acc_.get(name);
    const Tensor& g = grads.at(i);
    k.adagrad(g.size(), options_.learning_rate, options_.decay, options_.epsilon, g.data(), acc.data(),
              theta.data());
  }
}

}  // namespace usd
