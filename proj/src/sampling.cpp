// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/sampling.hpp"

#include <unordered_set>

#include "usd/error.hpp"

namespace usd {

ContextIndex::ContextIndex(std::span<const UserDayContext> contexts) : contexts_(contexts) {
  index_.reserve(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto [it, inserted] = index_.emplace(user_day_key(contexts[i].user_id, contexts[i].day), i);
    if (!inserted) {
      throw IntegrityError("duplicate context for user " + std::to_string(contexts[i].user_id) + " day " +
                           std::to_string(contexts[i].day));
    }
  }
}

const UserDayContext* ContextIndex::find(std::uint32_t user, std::uint32_t day) const {
  auto it = index_.find(user_day_key(user, day));
  return it == index_.end() ? nullptr : &contexts_[it->second];
}

const UserDayContext& ContextIndex::at(std::uint32_t user, std::uint32_t day) const {
  if (const auto* c = find(user, day)) return *c;
  throw IntegrityError("no context for user " + std::to_string(user) + " day " + std::to_string(day));
}

std::vector<ExposureRecord> sample_confident(std::span<const ExposureRecord> exposures,
                                             std::span<const UserDayContext> contexts) {
  const ContextIndex index(contexts);
  std::vector<ExposureRecord> out;
  for (const auto& r : exposures) {
    if (index.at(r.user_id, r.day).y_p == 1) out.push_back(r);
  }
  return out;
}

std::vector<UserDayContext> sample_uiem_training(std::span<const UserDayContext> contexts) {
  std::vector<UserDayContext> out;
  for (const auto& c : contexts) {
    if (c.r_p == 1) out.push_back(c);
  }
  return out;
}

Partition partition(std::span<const ExposureRecord> ctr_set, std::span<const UserDayContext> contexts) {
  const ContextIndex index(contexts);
  Partition p;
  std::unordered_set<std::uint64_t> seen;
  for (const auto& r : ctr_set) {
    if (!seen.insert(user_day_key(r.user_id, r.day)).second) continue;
    const auto& c = index.at(r.user_id, r.day);
    if (c.y_p != 1) {
      throw IntegrityError("partition: user " + std::to_string(r.user_id) + " day " + std::to_string(r.day) +
                           " has y_p = 0; only confident samples can be partitioned");
    }
    (c.y_b == 1 ? p.block : p.portal).push_back({r.user_id, r.day});
  }
  return p;
}

SampledSets sample_all(std::span<const ExposureRecord> exposures, std::span<const UserDayContext> contexts) {
  SampledSets s;
  s.ctr_set = sample_confident(exposures, contexts);
  s.uiem_set = sample_uiem_training(contexts);
  s.cohorts = partition(s.ctr_set, contexts);
  return s;
}

std::vector<ExposureRecord> sample_block_clicks(std::span<const ExposureRecord> exposures,
                                                std::span<const UserDayContext> contexts) {
  const ContextIndex index(contexts);
  std::vector<ExposureRecord> out;
  for (const auto& r : exposures) {
    if (index.at(r.user_id, r.day).y_b == 1) out.push_back(r);
  }
  return out;
}

}  // namespace usd
