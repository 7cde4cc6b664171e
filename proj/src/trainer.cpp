// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "usd/debias.hpp"
#include "usd/error.hpp"
#include "usd/parallel.hpp"
#include "usd/rng.hpp"

namespace usd {

namespace {

constexpr std::uint64_t kUiemShuffleTag = stream::kShuffle ^ 0x55494;
constexpr std::size_t kEvalChunk = 2048;

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.index(i)]);
  return p;
}

// Endless shuffled pass over the UIEM set; every pass uses its own stream.
class UiemBatches {
 public:
  UiemBatches(const std::vector<UserDayContext>& set, std::size_t batch, std::uint64_t seed)
      : set_(set), batch_(std::min(batch, set.size())), seed_(seed) {}

  std::vector<UserDayContext> next() {
    std::vector<UserDayContext> out;
    out.reserve(batch_);
    while (out.size() < batch_) {
      if (pos_ == order_.size()) {
        order_ = permutation(set_.size(), stream_seed(seed_, kUiemShuffleTag, pass_++));
        pos_ = 0;
      }
      out.push_back(set_[order_[pos_++]]);
    }
    return out;
  }

 private:
  const std::vector<UserDayContext>& set_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::uint64_t pass_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

struct UiemTerms {
  NodeId portal;
  NodeId block;
};

UiemTerms uiem_terms(Graph& g, const Uiem& uiem, const std::vector<UserDayContext>& batch) {
  const std::size_t m = batch.size();
  const auto tokens = flatten_sequences(batch);
  const Uiem::Nodes nodes = uiem.forward(g, tokens, m);
  Tensor yp({m}), yb({m});
  for (std::size_t i = 0; i < m; ++i) {
    yp[i] = batch[i].y_p;
    yb[i] = batch[i].y_b;
  }
  return {g.bce(nodes.portal, std::move(yp), Tensor::filled({m}, 1.0)),
          g.bce(nodes.block, std::move(yb), Tensor::filled({m}, 1.0))};
}

}  // namespace

DataSplit split_dataset(const Dataset& ds, std::size_t eval_days) {
  if (ds.num_days < kFirstLabelDay + 1 + eval_days) {
    throw ConfigError("dataset has " + std::to_string(ds.num_days) + " days; holding out " + std::to_string(eval_days) +
                      " eval days leaves no training label day (need days >= " +
                      std::to_string(kFirstLabelDay + 1 + eval_days) + ")");
  }
  DataSplit s;
  s.first_eval_day = static_cast<std::uint32_t>(ds.num_days - eval_days);
  for (const auto& r : ds.exposures) {
    if (r.day >= s.first_eval_day) {
      s.eval_exposures.push_back(r);
    } else if (r.day >= kFirstLabelDay) {
      s.train_exposures.push_back(r);
    }
  }
  for (const auto& c : ds.contexts) (c.day >= s.first_eval_day ? s.eval_contexts : s.train_contexts).push_back(c);
  return s;
}

WeightPolicy weight_policy(Variant v) {
  switch (v) {
    case Variant::usd:
      return {true, true};
    case Variant::wo_p:
    case Variant::wo_ps:
      return {false, true};
    case Variant::wo_b:
      return {true, false};
    case Variant::base:
    case Variant::wo_d:
      return {false, false};
  }
  return {};
}

VariantSets variant_sets(const DataSplit& split, Variant v) {
  VariantSets s;
  switch (v) {
    case Variant::base:
      s.ctr_set = split.train_exposures;
      break;
    case Variant::wo_ps:
      s.ctr_set = sample_block_clicks(split.train_exposures, split.train_contexts);
      break;
    default:
      s.ctr_set = sample_confident(split.train_exposures, split.train_contexts);
      break;
  }
  s.uiem_set = sample_uiem_training(split.train_contexts);
  if (s.ctr_set.empty()) {
    throw ConfigError("variant " + std::string(variant_name(v)) + " has an empty CTR training set");
  }
  if (weight_policy(v).any() && s.uiem_set.empty()) {
    throw ConfigError("variant " + std::string(variant_name(v)) +
                      " needs intent estimates but no training context has r_p = 1");
  }
  return s;
}

std::vector<double> batch_weights(std::span<const ExposureRecord> rows, const ContextIndex& contexts,
                                  const Uiem& uiem, const ParameterSet& params, WeightPolicy policy,
                                  ClipRange clip) {
  std::vector<double> w(rows.size(), 1.0);
  if (!policy.any()) return w;
  std::map<std::uint64_t, std::size_t> slot;
  std::vector<UserDayContext> need;
  for (const auto& r : rows) {
    const auto& c = contexts.at(r.user_id, r.day);
    if (c.y_p == 0) continue;
    if ((c.y_b == 1 && !policy.block) || (c.y_b == 0 && !policy.portal)) continue;
    if (slot.emplace(user_day_key(r.user_id, r.day), need.size()).second) need.push_back(c);
  }
  if (need.empty()) return w;
  const auto tokens = flatten_sequences(need);
  const auto est = uiem.predict(params, tokens, need.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto it = slot.find(user_day_key(rows[i].user_id, rows[i].day));
    if (it == slot.end()) continue;
    const auto& c = need[it->second];
    const auto& e = est[it->second];
    w[i] = debias_weight(c.y_b == 1 ? Cohort::block : Cohort::portal, e.y_hat_p, e.y_hat_b, clip);
  }
  return w;
}

Trainer::Trainer(const Dataset& ds, const ExperimentConfig& config)
    : config_(config),
      split_(split_dataset(ds, config.eval.eval_days)),
      history_(ds.exposures),
      uiem_(config.model.uiem),
      ctr_(CtrConfig{ds.num_users, ds.num_items, config.model.ctr_dim, config.model.ctr_hidden,
                     config.model.behavior_len}) {
  config_.train.validate();
}

ParameterSet Trainer::init() const {
  ParameterSet p = uiem_.init(config_.train.seed);
  p.merge(ctr_.init(config_.train.seed));
  return p;
}

void Trainer::pretrain(ParameterSet& params, const VariantSets& sets) {
  if (sets.uiem_set.empty() || config_.train.pretrain_epochs == 0) return;
  const auto& tc = config_.train;
  ParameterSet uiem_params = params.subset("uiem.");
  AdagradDecay opt(uiem_params, tc.optimizer);
  UiemBatches batches(sets.uiem_set, tc.batch_size_uiem, stream_seed(tc.seed, kUiemShuffleTag, 0xFFFF));
  const std::size_t steps =
      tc.pretrain_epochs * ((sets.uiem_set.size() + tc.batch_size_uiem - 1) / tc.batch_size_uiem);
  for (std::size_t s = 0; s < steps; ++s) {
    Graph g(uiem_params);
    const UiemTerms t = uiem_terms(g, uiem_, batches.next());
    opt.step(uiem_params, g.backward(g.add(t.portal, t.block)));
  }
  params.merge(uiem_params);
}

TrainResult Trainer::run() {
  const auto& tc = config_.train;
  const VariantSets sets = variant_sets(split_, tc.variant);
  const WeightPolicy policy = weight_policy(tc.variant);
  const ContextIndex contexts(split_.train_contexts);

  TrainResult result;
  result.params = init();
  result.ctr_rows = sets.ctr_set.size();
  result.uiem_rows = sets.uiem_set.size();
  result.steps_per_epoch = (sets.ctr_set.size() + tc.batch_size_ctr - 1) / tc.batch_size_ctr;
  if (tc.epochs == 0) return result;

  const bool cotrain = tc.uiem_mode == UiemMode::cotrain;
  if (!cotrain) pretrain(result.params, sets);

  ParameterSet& params = result.params;
  AdagradDecay opt(params, tc.optimizer);
  UiemBatches uiem_batches(sets.uiem_set, tc.batch_size_uiem, tc.seed);
  std::vector<ExposureRecord> rows;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    const auto order = permutation(sets.ctr_set.size(), stream_seed(tc.seed, stream::kShuffle, epoch));
    for (std::size_t begin = 0; begin < order.size(); begin += tc.batch_size_ctr) {
      const std::size_t end = std::min(order.size(), begin + tc.batch_size_ctr);
      rows.clear();
      for (std::size_t i = begin; i < end; ++i) rows.push_back(sets.ctr_set[order[i]]);
      const std::size_t n = rows.size();

      std::vector<double> w = batch_weights(rows, contexts, uiem_, params, policy, tc.clip);
      const CtrBatch batch = make_batch(rows, history_, ctr_);

      Graph g(params);
      const NodeId probs = ctr_.forward(g, batch);
      const NodeId l_ctr = g.bce(probs, Tensor({n}, batch.labels), Tensor({n}, std::move(w)));
      LossRow row;
      row.step = step++;
      row.l_ctr = g.value(l_ctr).item();
      NodeId total = l_ctr;
      if (!sets.uiem_set.empty()) {
        const UiemTerms t = uiem_terms(g, uiem_, uiem_batches.next());
        row.l_portal = g.value(t.portal).item();
        row.l_block = g.value(t.block).item();
        if (cotrain) total = g.add(l_ctr, g.add(g.scale(t.portal, tc.alpha), g.scale(t.block, tc.beta)));
      }
      row.l_final = cotrain ? g.value(total).item() : final_loss(row.l_ctr, row.l_portal, row.l_block, tc.alpha, tc.beta);
      if (!std::isfinite(row.l_final)) throw NumericError("non-finite loss at step " + std::to_string(row.step));
      Gradients grads = g.backward(total);
      opt.step(params, cotrain ? grads : grads.subset("ctr."));
      result.losses.push_back(row);
    }
  }
  return result;
}

MetricsReport evaluate_params(const ParameterSet& params, const Dataset& ds, const ExperimentConfig& config) {
  const CtrModel model(CtrModel::infer_config(params, config.model.behavior_len));
  if (model.config().num_users < ds.num_users || model.config().num_items < ds.num_items) {
    throw IntegrityError("checkpoint covers " + std::to_string(model.config().num_users) + " users and " +
                         std::to_string(model.config().num_items) + " items; dataset has " +
                         std::to_string(ds.num_users) + " and " + std::to_string(ds.num_items));
  }
  const DataSplit split = split_dataset(ds, config.eval.eval_days);
  const std::vector<ExposureRecord> rows = config.eval.set == EvalSet::sampled
                                               ? sample_confident(split.eval_exposures, split.eval_contexts)
                                               : split.eval_exposures;
  if (rows.empty()) throw InputError("evaluate: empty eval set");
  const ClickHistory history(ds.exposures);

  std::vector<ScoredExposure> scored(rows.size());
  const std::size_t chunks = (rows.size() + kEvalChunk - 1) / kEvalChunk;
  parallel_chunks(chunks, config.eval.threads, [&](std::size_t cb, std::size_t ce) {
    for (std::size_t c = cb; c < ce; ++c) {
      const std::size_t begin = c * kEvalChunk, end = std::min(rows.size(), begin + kEvalChunk);
      const std::span<const ExposureRecord> part(rows.data() + begin, end - begin);
      const auto p = model.predict(params, make_batch(part, history, model));
      for (std::size_t i = 0; i < part.size(); ++i) scored[begin + i] = {part[i].user_id, part[i].label, p[i]};
    }
  });
  return evaluate(scored, config.eval.threads);
}

}  // namespace usd
