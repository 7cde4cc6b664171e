// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Intent-driven sample filters.
//
//   sample_confident      exposures of users who visited the portal that day
//   sample_uiem_training  contexts of users who visited in the past week
//   partition             confident user-days split into portal-only and
//                         block-click cohorts
//
// Cohorts are keyed by user-day: the same user can be in the block cohort on
// one day and the portal cohort on another.

#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "usd/world.hpp"

namespace usd {

struct UserDay {
  std::uint32_t user_id = 0;
  std::uint32_t day = 0;
  friend auto operator<=>(const UserDay&, const UserDay&) = default;
};

inline std::uint64_t user_day_key(std::uint32_t user, std::uint32_t day) {
  return (static_cast<std::uint64_t>(user) << 32) | day;
}

enum class Cohort : std::uint8_t { portal, block };

// user-day -> context lookup over a context list.
class ContextIndex {
 public:
  explicit ContextIndex(std::span<const UserDayContext> contexts);
  const UserDayContext* find(std::uint32_t user, std::uint32_t day) const;
  // Throws IntegrityError when missing.
  const UserDayContext& at(std::uint32_t user, std::uint32_t day) const;

 private:
  std::span<const UserDayContext> contexts_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

struct Partition {
  std::vector<UserDay> portal;  // y_p = 1, y_b = 0
  std::vector<UserDay> block;   // y_b = 1
};

struct SampledSets {
  std::vector<ExposureRecord> ctr_set;
  std::vector<UserDayContext> uiem_set;
  Partition cohorts;
};

std::vector<ExposureRecord> sample_confident(std::span<const ExposureRecord> exposures,
                                             std::span<const UserDayContext> contexts);

std::vector<UserDayContext> sample_uiem_training(std::span<const UserDayContext> contexts);

// User-days appear in first-seen order of `ctr_set`.
Partition partition(std::span<const ExposureRecord> ctr_set, std::span<const UserDayContext> contexts);

SampledSets sample_all(std::span<const ExposureRecord> exposures, std::span<const UserDayContext> contexts);

// Click-sampling (block-click user-days only), the sampler the -w/o PS arm uses.
std::vector<ExposureRecord> sample_block_clicks(std::span<const ExposureRecord> exposures,
                                                std::span<const UserDayContext> contexts);

}  // namespace usd
