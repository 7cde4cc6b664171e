// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/uiem.hpp"

#include <algorithm>
#include <cmath>

#include "usd/error.hpp"
#include "usd/losses.hpp"
#include "usd/rng.hpp"

namespace usd {

void UiemConfig::validate() const {
  if (dim == 0 || layers == 0 || heads == 0 || ffn == 0 || seq_len == 0) {
    throw ConfigError("uiem dims must all be > 0");
  }
  if (dim % heads != 0) throw ConfigError("uiem.dim must be divisible by uiem.heads");
  if (!(ln_eps > 0)) throw ConfigError("uiem layer-norm epsilon must be > 0");
}

namespace {

std::string layer_prefix(std::size_t l) { return "uiem.layer" + std::to_string(l) + "."; }

Tensor random_tensor(Rng& rng, Shape shape, double sd) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.normal(0.0, sd);
  return t;
}

Tensor causal_mask(std::size_t t_len) {
  Tensor m({t_len, t_len});
  for (std::size_t i = 0; i < t_len; ++i) {
    for (std::size_t j = i + 1; j < t_len; ++j) m.at(i, j) = kMaskValue;
  }
  return m;
}

}  // namespace

Uiem::Uiem(UiemConfig config) : config_(config) { config_.validate(); }

ParameterSet Uiem::init(std::uint64_t seed) const {
  Rng rng(stream_seed(seed, stream::kInit, 0x5545));
  const std::size_t d = config_.dim, dh = d / config_.heads, f = config_.ffn;
  const double wd = 1.0 / std::sqrt(static_cast<double>(d));
  ParameterSet p;
  p.add("uiem.token_emb", random_tensor(rng, {3, d}, 0.5));
  p.add("uiem.pos_emb", random_tensor(rng, {config_.seq_len, d}, 0.1));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string pre = layer_prefix(l);
    p.add(pre + "ln1.gain", Tensor::filled({d}, 1.0));
    p.add(pre + "ln1.bias", Tensor({d}));
    for (std::size_t h = 0; h < config_.heads; ++h) {
      const std::string hp = pre + "attn.h" + std::to_string(h) + ".";
      p.add(hp + "wq", random_tensor(rng, {d, dh}, wd));
      p.add(hp + "wk", random_tensor(rng, {d, dh}, wd));
      p.add(hp + "wv", random_tensor(rng, {d, dh}, wd));
    }
    p.add(pre + "attn.wo", random_tensor(rng, {d, d}, wd));
    p.add(pre + "attn.bo", Tensor({d}));
    p.add(pre + "ln2.gain", Tensor::filled({d}, 1.0));
    p.add(pre + "ln2.bias", Tensor({d}));
    p.add(pre + "ffn.w1", random_tensor(rng, {d, f}, wd));
    p.add(pre + "ffn.b1", Tensor({f}));
    p.add(pre + "ffn.w2", random_tensor(rng, {f, d}, 1.0 / std::sqrt(static_cast<double>(f))));
    p.add(pre + "ffn.b2", Tensor({d}));
  }
  for (const char* head : {"uiem.portal.", "uiem.block."}) {
    const std::string hp = head;
    p.add(hp + "w1", random_tensor(rng, {d, d}, wd));
    p.add(hp + "b1", Tensor({d}));
    p.add(hp + "w2", random_tensor(rng, {d, 1}, wd));
    p.add(hp + "b2", Tensor({1}));
  }
  return p;
}

UiemConfig Uiem::infer_config(const ParameterSet& params, UiemConfig base) {
  const Tensor& tok = params.get("uiem.token_emb");
  const Tensor& pos = params.get("uiem.pos_emb");
  base.dim = tok.dim(1);
  base.seq_len = pos.dim(0);
  base.layers = 0;
  while (params.contains(layer_prefix(base.layers) + "attn.wo")) ++base.layers;
  base.heads = 0;
  while (params.contains(layer_prefix(0) + "attn.h" + std::to_string(base.heads) + ".wq")) ++base.heads;
  if (base.layers == 0 || base.heads == 0) throw FormatError("uiem parameters are missing decoder layers");
  base.ffn = params.get(layer_prefix(0) + "ffn.w1").dim(1);
  base.validate();
  return base;
}

NodeId Uiem::decoder_block(Graph& g, NodeId x, std::size_t layer, std::size_t batch, const Tensor& mask) const {
  const std::string pre = layer_prefix(layer);
  const std::size_t t_len = config_.seq_len, d = config_.dim, dh = d / config_.heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  const NodeId h = g.layer_norm(x, g.param(pre + "ln1.gain"), g.param(pre + "ln1.bias"), config_.ln_eps);
  std::vector<NodeId> head_out;
  head_out.reserve(config_.heads);
  for (std::size_t hd = 0; hd < config_.heads; ++hd) {
    const std::string hp = pre + "attn.h" + std::to_string(hd) + ".";
    const NodeId q = g.reshape(g.matmul(h, g.param(hp + "wq")), {batch, t_len, dh});
    const NodeId k = g.reshape(g.matmul(h, g.param(hp + "wk")), {batch, t_len, dh});
    const NodeId v = g.reshape(g.matmul(h, g.param(hp + "wv")), {batch, t_len, dh});
    const NodeId scores = g.scale(g.matmul(q, g.transpose(k)), inv_sqrt_dh);
    const NodeId attn = g.softmax(scores, mask);
    head_out.push_back(g.reshape(g.matmul(attn, v), {batch * t_len, dh}));
  }
  const NodeId merged = g.concat(head_out);
  const NodeId attn_out = g.add_bias(g.matmul(merged, g.param(pre + "attn.wo")), g.param(pre + "attn.bo"));
  const NodeId x1 = g.add(x, attn_out);

  const NodeId h2 = g.layer_norm(x1, g.param(pre + "ln2.gain"), g.param(pre + "ln2.bias"), config_.ln_eps);
  const NodeId f1 = g.relu(g.add_bias(g.matmul(h2, g.param(pre + "ffn.w1")), g.param(pre + "ffn.b1")));
  const NodeId f2 = g.add_bias(g.matmul(f1, g.param(pre + "ffn.w2")), g.param(pre + "ffn.b2"));
  return g.add(x1, f2);
}

NodeId Uiem::mlp_head(Graph& g, NodeId hidden, const std::string& prefix) const {
  const NodeId z = g.relu(g.add_bias(g.matmul(hidden, g.param(prefix + "w1")), g.param(prefix + "b1")));
  const NodeId logit = g.add_bias(g.matmul(z, g.param(prefix + "w2")), g.param(prefix + "b2"));
  const std::size_t batch = g.value(logit).dim(0);
  return g.sigmoid(g.reshape(logit, {batch}));
}

std::pair<NodeId, NodeId> Uiem::heads(Graph& g, NodeId hidden) const {
  return {mlp_head(g, hidden, "uiem.portal."), mlp_head(g, hidden, "uiem.block.")};
}

Uiem::Nodes Uiem::forward(Graph& g, std::span<const std::int8_t> tokens, std::size_t batch) const {
  const std::size_t t_len = config_.seq_len, d = config_.dim;
  if (batch == 0 || tokens.size() != batch * t_len) {
    throw InputError("uiem: expected " + std::to_string(batch) + " x " + std::to_string(t_len) + " tokens, got " +
                     std::to_string(tokens.size()));
  }
  std::vector<std::size_t> rows(tokens.size());
  std::vector<std::size_t> positions(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int tok = tokens[i];
    if (tok < -1 || tok > 1) throw InputError("uiem: token " + std::to_string(tok) + " is not in {-1, 0, 1}");
    rows[i] = static_cast<std::size_t>(tok + 1);
    positions[i] = i % t_len;
  }
  const NodeId es = g.embedding(g.param("uiem.token_emb"), rows);  // [B*T, d]
  const NodeId pos = g.embedding(g.param("uiem.pos_emb"), positions);
  NodeId x = g.add(es, pos);
  const Tensor mask = causal_mask(t_len);
  for (std::size_t l = 0; l < config_.layers; ++l) x = decoder_block(g, x, l, batch, mask);

  Nodes out;
  out.decoded = g.reshape(x, {batch, t_len, d});
  const NodeId summary =
      config_.readout == Readout::last ? g.take(out.decoded, 1, t_len - 1) : g.mean(out.decoded, 1);
  NodeId pooled = g.mean(g.reshape(es, {batch, t_len, d}), 1);
  if (config_.pooling == Pooling::sum) pooled = g.scale(pooled, static_cast<double>(t_len));
  out.hidden = g.add(summary, pooled);
  std::tie(out.portal, out.block) = heads(g, out.hidden);
  return out;
}

std::vector<IntentEstimate> Uiem::predict(const ParameterSet& params, std::span<const std::int8_t> tokens,
                                          std::size_t batch) const {
  Graph g(params);
  const Nodes n = forward(g, tokens, batch);
  const Tensor& hp = g.value(n.portal);
  const Tensor& hb = g.value(n.block);
  const Tensor& hid = g.value(n.hidden);
  const std::size_t d = config_.dim;
  std::vector<IntentEstimate> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    out[b].y_hat_p = clamp_prob(hp[b]);
    out[b].y_hat_b = clamp_prob(hb[b]);
    out[b].hidden.assign(hid.data() + b * d, hid.data() + (b + 1) * d);
  }
  return out;
}

std::vector<std::int8_t> flatten_sequences(std::span<const UserDayContext> contexts) {
  std::vector<std::int8_t> out;
  out.reserve(contexts.size() * kSeqLen);
  for (const auto& c : contexts) out.insert(out.end(), c.sequence.begin(), c.sequence.end());
  return out;
}

UiemLosses uiem_losses(std::span<const LabeledIntent> batch) {
  if (batch.empty()) throw InputError("uiem_losses: empty batch");
  std::vector<LabeledIntent> sorted(batch.begin(), batch.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const LabeledIntent& a, const LabeledIntent& b) {
    return a.user_id != b.user_id ? a.user_id < b.user_id : a.day < b.day;
  });
  UiemLosses l;
  for (const auto& s : sorted) {
    l.portal += binary_cross_entropy(s.y_p, s.y_hat_p);
    l.block += binary_cross_entropy(s.y_b, s.y_hat_b);
  }
  const double n = static_cast<double>(sorted.size());
  l.portal /= n;
  l.block /= n;
  return l;
}

}  // namespace usd
