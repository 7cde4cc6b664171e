// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// BASE click-through-rate model with single-head target attention.
//
//   q = item_emb[i] Wq,  k_j = item_emb[b_j] Wk
//   a = softmax_j(q . k_j / sqrt(d) + mask_j)
//   s = sum_j a_j item_emb[b_j]                (zero when every slot is padding)
//   y = sigmoid(w2 . relu(W1 [user_emb[u]; item_emb[i]; s] + b1) + b2)
//
// The behavior list shares the item table. Row `num_items` of the table is
// the padding id.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "usd/graph.hpp"
#include "usd/world.hpp"

namespace usd {

struct CtrConfig {
  std::size_t num_users = 1;
  std::size_t num_items = 1;
  std::size_t dim = 16;
  std::size_t hidden = 32;
  std::size_t behavior_len = 20;

  void validate() const;
};

// One mini-batch. `behaviors` holds behavior_len ids per row, padded with
// the null id (num_items).
struct CtrBatch {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> items;
  std::vector<std::uint32_t> behaviors;
  std::vector<double> labels;

  std::size_t size() const noexcept { return users.size(); }
};

class CtrModel {
 public:
  explicit CtrModel(CtrConfig config);

  const CtrConfig& config() const noexcept { return config_; }
  std::uint32_t null_item() const noexcept { return static_cast<std::uint32_t>(config_.num_items); }

  // Parameters named "ctr.*".
  ParameterSet init(std::uint64_t seed) const;

  static CtrConfig infer_config(const ParameterSet& params, std::size_t behavior_len);

  // Click probabilities, shape [B].
  NodeId forward(Graph& g, const CtrBatch& batch) const;

  std::vector<double> predict(const ParameterSet& params, const CtrBatch& batch) const;

 private:
  void check_ids(const CtrBatch& batch) const;

  CtrConfig config_;
};

// Clicked items per user in (day, exposure) order, for behavior lists.
class ClickHistory {
 public:
  explicit ClickHistory(std::span<const ExposureRecord> exposures);

  // The last `len` items the user clicked strictly before `day`, oldest
  // first, padded at the end with `null_item`.
  void behaviors(std::uint32_t user, std::uint32_t day, std::size_t len, std::uint32_t null_item,
                 std::vector<std::uint32_t>& out) const;

 private:
  struct Click {
    std::uint32_t day;
    std::uint32_t item;
  };
  std::unordered_map<std::uint32_t, std::vector<Click>> clicks_;
};

// Builds a batch from the given exposure rows.
CtrBatch make_batch(std::span<const ExposureRecord> rows, const ClickHistory& history, const CtrModel& model);

}  // namespace usd
