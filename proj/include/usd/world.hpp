// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic homepage-block world with known latent intents.
//
// Each user visits the marketing portal on a day with probability
// portal_affinity. On a visit the user clicks the block with marginal
// probability block_affinity; the decision is coupled to how appealing the
// shown items are through a Gaussian copula with correlation
// coupling * portal_affinity (coupling = 0 makes it an independent coin).
// After a block click each shown item is clicked with probability
// sigmoid(preference . embedding + bias). Exposures on days without a portal
// visit are invalid: the user never looked, so their labels are 0.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace usd {

inline constexpr std::size_t kSeqLen = 30;   // days of history per context
inline constexpr std::size_t kLookback = 7;  // r_p window, strictly before the label day
// First day that can carry a context.
inline constexpr std::size_t kFirstLabelDay = kSeqLen + kLookback;

struct WorldConfig {
  std::size_t users = 1000;
  std::size_t items = 200;
  std::size_t item_dim = 8;
  std::size_t item_categories = 10;
  std::size_t days = 75;
  std::size_t exposures_per_user_day = 2;
  double portal_alpha = 2.0;  // portal_affinity ~ Beta(alpha, beta)
  double portal_beta = 3.0;
  double block_alpha = 2.0;   // block_affinity ~ Beta(alpha, beta)
  double block_beta = 5.0;
  double item_scale = 2.0;    // sd of preference . embedding
  double item_bias_mean = -0.5;
  double item_bias_sd = 1.0;
  double coupling = 0.8;
  std::uint64_t seed = 1;
  std::size_t threads = 1;    // 0 = hardware concurrency

  void validate() const;
};

struct LatentUser {
  std::uint32_t user_id = 0;
  double portal_affinity = 0.0;
  double block_affinity = 0.0;
  std::vector<double> preference;
};

struct Item {
  std::uint32_t item_id = 0;
  std::uint32_t feature_id = 0;
  std::vector<double> embedding;
  double bias = 0.0;
};

struct ExposureRecord {
  std::uint32_t user_id = 0;
  std::uint32_t item_id = 0;
  std::uint32_t day = 0;
  std::uint8_t label = 0;
  std::uint32_t item_feature_id = 0;

  friend bool operator==(const ExposureRecord&, const ExposureRecord&) = default;
};

// Tokens: -1 no portal visit, 0 portal visit without block click, 1 block click.
using Sequence = std::array<std::int8_t, kSeqLen>;

struct UserDayContext {
  std::uint32_t user_id = 0;
  std::uint32_t day = 0;
  std::uint8_t y_p = 0;
  std::uint8_t y_b = 0;
  std::uint8_t r_p = 0;
  Sequence sequence{};  // days [day - 30, day - 1], oldest first

  friend bool operator==(const UserDayContext&, const UserDayContext&) = default;
};

struct Dataset {
  std::vector<ExposureRecord> exposures;  // every simulated day, ordered by (user, day)
  std::vector<UserDayContext> contexts;   // label days only, ordered by (user, day)
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t num_days = 0;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct World {
  WorldConfig config;
  std::vector<LatentUser> users;
  std::vector<Item> items;
};

World generate_world(const WorldConfig& config, std::uint64_t master_seed);

struct SimulationOptions {
  std::size_t num_days = 75;
  std::size_t exposures_per_user_day = 2;
  double coupling = 0.8;
  std::size_t threads = 1;
};

Dataset simulate_days(const std::vector<LatentUser>& users, const std::vector<Item>& items,
                      const SimulationOptions& options, std::uint64_t master_seed);

// simulate_days driven by the world's own config (days, exposures, coupling,
// seed, threads).
Dataset simulate_world(const World& world);

// Ground truth for tests and diagnostics. Training code never calls these.
namespace oracle {

struct Propensities {
  double portal = 0.0;
  double block = 0.0;
};

Propensities propensities(const World& world, std::uint32_t user_id);

// True click probability of an item for a user on a day the block was clicked.
double item_click_probability(const LatentUser& user, const Item& item);

}  // namespace oracle

std::string world_meta(const WorldConfig& config);

}  // namespace usd
