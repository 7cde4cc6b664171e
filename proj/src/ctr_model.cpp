// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/ctr_model.hpp"

#include <algorithm>
#include <cmath>

#include "usd/error.hpp"
#include "usd/losses.hpp"
#include "usd/rng.hpp"

namespace usd {

void CtrConfig::validate() const {
  if (num_users == 0 || num_items == 0) throw ConfigError("ctr model needs at least one user and one item");
  if (dim == 0 || hidden == 0 || behavior_len == 0) throw ConfigError("ctr dims must all be > 0");
}

CtrModel::CtrModel(CtrConfig config) : config_(config) { config_.validate(); }

ParameterSet CtrModel::init(std::uint64_t seed) const {
  Rng rng(stream_seed(seed, stream::kInit, 0x435452));
  const std::size_t d = config_.dim, h = config_.hidden;
  auto normal = [&](Shape shape, double sd) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = rng.normal(0.0, sd);
    return t;
  };
  ParameterSet p;
  p.add("ctr.user_emb", normal({config_.num_users, d}, 0.1));
  p.add("ctr.item_emb", normal({config_.num_items + 1, d}, 0.1));
  p.add("ctr.attn.wq", normal({d, d}, 1.0 / std::sqrt(static_cast<double>(d))));
  p.add("ctr.attn.wk", normal({d, d}, 1.0 / std::sqrt(static_cast<double>(d))));
  p.add("ctr.mlp.w1", normal({3 * d, h}, 1.0 / std::sqrt(static_cast<double>(3 * d))));
  p.add("ctr.mlp.b1", Tensor({h}));
  p.add("ctr.mlp.w2", normal({h, 1}, 1.0 / std::sqrt(static_cast<double>(h))));
  p.add("ctr.mlp.b2", Tensor({1}));
  return p;
}

CtrConfig CtrModel::infer_config(const ParameterSet& params, std::size_t behavior_len) {
  CtrConfig c;
  const Tensor& users = params.get("ctr.user_emb");
  const Tensor& items = params.get("ctr.item_emb");
  if (users.rank() != 2 || items.rank() != 2 || items.dim(0) < 2) throw FormatError("ctr embedding tables malformed");
  c.num_users = users.dim(0);
  c.num_items = items.dim(0) - 1;
  c.dim = users.dim(1);
  c.hidden = params.get("ctr.mlp.w1").dim(1);
  c.behavior_len = behavior_len;
  c.validate();
  return c;
}

void CtrModel::check_ids(const CtrBatch& b) const {
  const std::size_t n = b.size(), len = config_.behavior_len;
  if (n == 0) throw InputError("ctr: empty batch");
  if (b.items.size() != n || b.behaviors.size() != n * len) {
    throw ShapeError("ctr: batch of " + std::to_string(n) + " rows needs " + std::to_string(n) + " items and " +
                     std::to_string(n * len) + " behavior ids");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (b.users[i] >= config_.num_users) {
      throw InputError("ctr: user id " + std::to_string(b.users[i]) + " out of range [0, " +
                       std::to_string(config_.num_users) + ")");
    }
    if (b.items[i] >= config_.num_items) {
      throw InputError("ctr: item id " + std::to_string(b.items[i]) + " out of range [0, " +
                       std::to_string(config_.num_items) + ")");
    }
  }
  for (std::uint32_t id : b.behaviors) {
    if (id > config_.num_items) {
      throw InputError("ctr: behavior id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(config_.num_items) + "]");
    }
  }
}

NodeId CtrModel::forward(Graph& g, const CtrBatch& batch) const {
  check_ids(batch);
  const std::size_t n = batch.size(), d = config_.dim, len = config_.behavior_len;
  const std::vector<std::size_t> users(batch.users.begin(), batch.users.end());
  const std::vector<std::size_t> items(batch.items.begin(), batch.items.end());
  const std::vector<std::size_t> behaviors(batch.behaviors.begin(), batch.behaviors.end());

  const NodeId item_table = g.param("ctr.item_emb");
  const NodeId u = g.embedding(g.param("ctr.user_emb"), users);
  const NodeId it = g.embedding(item_table, items);
  const NodeId bh = g.embedding(item_table, behaviors);  // [n*len, d]

  Tensor mask({n, 1, len});
  for (std::size_t i = 0; i < n * len; ++i) {
    if (batch.behaviors[i] == null_item()) mask[i] = kMaskValue;
  }
  const NodeId q = g.reshape(g.matmul(it, g.param("ctr.attn.wq")), {n, 1, d});
  const NodeId k = g.reshape(g.matmul(bh, g.param("ctr.attn.wk")), {n, len, d});
  const NodeId scores = g.scale(g.matmul(q, g.transpose(k)), 1.0 / std::sqrt(static_cast<double>(d)));
  const NodeId weights = g.softmax(scores, mask);
  const NodeId summary = g.reshape(g.matmul(weights, g.reshape(bh, {n, len, d})), {n, d});

  const NodeId parts[] = {u, it, summary};
  const NodeId x = g.concat(parts);
  const NodeId h = g.relu(g.add_bias(g.matmul(x, g.param("ctr.mlp.w1")), g.param("ctr.mlp.b1")));
  const NodeId logit = g.add_bias(g.matmul(h, g.param("ctr.mlp.w2")), g.param("ctr.mlp.b2"));
  return g.sigmoid(g.reshape(logit, {n}));
}

std::vector<double> CtrModel::predict(const ParameterSet& params, const CtrBatch& batch) const {
  Graph g(params);
  const Tensor& p = g.value(forward(g, batch));
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = clamp_prob(p[i]);
  return out;
}

ClickHistory::ClickHistory(std::span<const ExposureRecord> exposures) {
  for (const auto& r : exposures) {
    if (r.label == 1) clicks_[r.user_id].push_back({r.day, r.item_id});
  }
  for (auto& [user, list] : clicks_) {
    std::stable_sort(list.begin(), list.end(), [](const Click& a, const Click& b) { return a.day < b.day; });
  }
}

void ClickHistory::behaviors(std::uint32_t user, std::uint32_t day, std::size_t len, std::uint32_t null_item,
                             std::vector<std::uint32_t>& out) const {
  const std::size_t start = out.size();
  out.resize(start + len, null_item);
  auto it = clicks_.find(user);
  if (it == clicks_.end()) return;
  const auto& list = it->second;
  const auto end = std::lower_bound(list.begin(), list.end(), day,
                                    [](const Click& c, std::uint32_t d) { return c.day < d; });
  const std::size_t count = static_cast<std::size_t>(end - list.begin());
  const std::size_t take = std::min(len, count);
  for (std::size_t j = 0; j < take; ++j) out[start + j] = list[count - take + j].item;
}

CtrBatch make_batch(std::span<const ExposureRecord> rows, const ClickHistory& history, const CtrModel& model) {
  CtrBatch b;
  const std::size_t len = model.config().behavior_len;
  b.users.reserve(rows.size());
  b.items.reserve(rows.size());
  b.labels.reserve(rows.size());
  b.behaviors.reserve(rows.size() * len);
  for (const auto& r : rows) {
    b.users.push_back(r.user_id);
    b.items.push_back(r.item_id);
    b.labels.push_back(r.label);
    history.behaviors(r.user_id, r.day, len, model.null_item(), b.behaviors);
  }
  return b;
}

}  // namespace usd
