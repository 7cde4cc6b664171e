// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/model_check.hpp"

#include "usd/ctr_model.hpp"
#include "usd/rng.hpp"
#include "usd/uiem.hpp"

namespace usd {

GradCheckReport check_final_loss(std::uint64_t seed, const ModelCheckOptions& options) {
  UiemConfig uc;
  uc.dim = 8;
  uc.layers = 1;
  uc.heads = 2;
  uc.ffn = 16;
  uc.seq_len = 8;
  const Uiem uiem(uc);
  const CtrModel ctr(CtrConfig{5, 7, 8, 8, 4});

  ParameterSet params = uiem.init(seed);
  params.merge(ctr.init(seed));
  // Move biases and gains off their neutral init so every path is exercised.
  Rng rng(stream_seed(seed, stream::kInit, 0xC4EC));
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double& v : params.at(i).values()) v += rng.normal(0.0, 0.1);
  }

  constexpr std::size_t kRows = 6;
  std::vector<std::int8_t> tokens(kRows * uc.seq_len);
  for (auto& t : tokens) t = static_cast<std::int8_t>(static_cast<int>(rng.index(3)) - 1);
  Tensor yp({kRows}), yb({kRows});
  for (std::size_t i = 0; i < kRows; ++i) {
    yb[i] = rng.bernoulli(0.4);
    yp[i] = yb[i] == 1.0 ? 1.0 : rng.bernoulli(0.5);
  }

  CtrBatch batch;
  for (std::size_t i = 0; i < kRows; ++i) {
    batch.users.push_back(static_cast<std::uint32_t>(rng.index(5)));
    batch.items.push_back(static_cast<std::uint32_t>(rng.index(7)));
    batch.labels.push_back(rng.bernoulli(0.4) ? 1.0 : 0.0);
    const std::size_t filled = rng.index(5);  // 0..4 real behaviors
    for (std::size_t j = 0; j < 4; ++j) {
      batch.behaviors.push_back(j < filled ? static_cast<std::uint32_t>(rng.index(7)) : ctr.null_item());
    }
  }
  const auto est = uiem.predict(params, tokens, kRows);
  std::vector<double> weights(kRows);
  for (std::size_t i = 0; i < kRows; ++i) {
    const Cohort c = yb[i] == 1.0 ? Cohort::block : Cohort::portal;
    weights[i] = debias_weight(c, est[i].y_hat_p, est[i].y_hat_b, options.clip);
  }

  const GraphLoss loss = [&](Graph& g) {
    const NodeId probs = ctr.forward(g, batch);
    const NodeId l_ctr = g.bce(probs, Tensor({kRows}, batch.labels), Tensor({kRows}, weights));
    const Uiem::Nodes n = uiem.forward(g, tokens, kRows);
    const NodeId lp = g.bce(n.portal, yp, Tensor::filled({kRows}, 1.0));
    const NodeId lb = g.bce(n.block, yb, Tensor::filled({kRows}, 1.0));
    return g.add(l_ctr, g.add(g.scale(lp, options.alpha), g.scale(lb, options.beta)));
  };
  return finite_diff_check(params, loss, options.check);
}

}  // namespace usd
