// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// User intent extraction module.
//
// A token sequence over {-1, 0, 1} is embedded (E_s), summed with learned
// positional embeddings, and passed through pre-norm causal Transformer
// decoder blocks. The sequence summary is
//
//     H = readout(Decoder(E_s + E_pos)) + pool(E_s)
//
// with readout = last position and pool = mean over positions by default.
// Two MLP heads (hidden width d, ReLU) followed by the logistic sigmoid give
// the portal-visit and block-click intent probabilities.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "usd/graph.hpp"
#include "usd/world.hpp"

namespace usd {

enum class Readout { last, mean };
enum class Pooling { mean, sum };

struct UiemConfig {
  std::size_t dim = 16;
  std::size_t layers = 1;
  std::size_t heads = 2;
  std::size_t ffn = 32;
  std::size_t seq_len = kSeqLen;
  double ln_eps = 1e-5;
  Readout readout = Readout::last;
  Pooling pooling = Pooling::mean;

  void validate() const;
};

struct IntentEstimate {
  double y_hat_p = 0.5;
  double y_hat_b = 0.5;
  std::vector<double> hidden;
};

class Uiem {
 public:
  explicit Uiem(UiemConfig config);

  const UiemConfig& config() const noexcept { return config_; }

  // Parameters named "uiem.*".
  ParameterSet init(std::uint64_t seed) const;

  // Recovers dims from parameter shapes; readout/pooling/eps from `base`.
  static UiemConfig infer_config(const ParameterSet& params, UiemConfig base = {});

  struct Nodes {
    NodeId decoded;  // [B, T, d] decoder output at every position
    NodeId hidden;   // [B, d]
    NodeId portal;   // [B] probabilities
    NodeId block;    // [B]
  };

  // `tokens` holds `batch` sequences of seq_len tokens back to back.
  Nodes forward(Graph& g, std::span<const std::int8_t> tokens, std::size_t batch) const;

  // The two heads on an existing hidden representation [B, d].
  std::pair<NodeId, NodeId> heads(Graph& g, NodeId hidden) const;

  NodeId encode(Graph& g, std::span<const std::int8_t> tokens, std::size_t batch) const {
    return forward(g, tokens, batch).hidden;
  }

  std::vector<IntentEstimate> predict(const ParameterSet& params, std::span<const std::int8_t> tokens,
                                      std::size_t batch) const;

 private:
  NodeId decoder_block(Graph& g, NodeId x, std::size_t layer, std::size_t batch, const Tensor& mask) const;
  NodeId mlp_head(Graph& g, NodeId hidden, const std::string& prefix) const;

  UiemConfig config_;
};

// Flattens context sequences for Uiem::forward.
std::vector<std::int8_t> flatten_sequences(std::span<const UserDayContext> contexts);

struct LabeledIntent {
  std::uint32_t user_id = 0;
  std::uint32_t day = 0;
  double y_hat_p = 0.5;
  double y_hat_b = 0.5;
  std::uint8_t y_p = 0;
  std::uint8_t y_b = 0;
};

struct UiemLosses {
  double portal = 0.0;
  double block = 0.0;
};

// Mean binary cross-entropy of each head. Terms are summed in (user, day)
// order, so any permutation of the batch gives bit-identical losses.
UiemLosses uiem_losses(std::span<const LabeledIntent> batch);

}  // namespace usd
