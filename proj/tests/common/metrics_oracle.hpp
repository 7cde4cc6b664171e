// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force O(n^2) pairwise AUC and GAUC, shared by the unit and
// acceptance tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "usd/metrics.hpp"
#include "usd/rng.hpp"

namespace usd::test {

// Fraction of (positive, negative) pairs ordered correctly, ties count half.
// Returns -1 when a class is missing.
inline double pairwise_auc(std::span<const double> s, std::span<const std::uint8_t> l) {
  double good = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!l[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[j]) continue;
      pairs += 1;
      good += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return pairs == 0 ? -1.0 : good / pairs;
}

struct OracleReport {
  double auc = 0, gauc_avg = 0, gauc_show = 0, gauc_click = 0;
  std::size_t users_evaluated = 0, users_excluded = 0;
};

inline OracleReport oracle_metrics(std::span<const ScoredExposure> samples) {
  OracleReport r;
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  std::map<std::uint32_t, std::pair<std::vector<double>, std::vector<std::uint8_t>>> users;
  for (const auto& x : samples) {
    s.push_back(x.score);
    l.push_back(x.label);
    users[x.user_id].first.push_back(x.score);
    users[x.user_id].second.push_back(x.label);
  }
  r.auc = pairwise_auc(s, l);
  double na = 0, da = 0, ns = 0, ds = 0, nc = 0, dc = 0;
  for (const auto& [id, v] : users) {
    const double a = pairwise_auc(v.first, v.second);
    if (a < 0) {
      ++r.users_excluded;
      continue;
    }
    ++r.users_evaluated;
    double clicks = 0;
    for (auto x : v.second) clicks += x;
    const double shows = static_cast<double>(v.first.size());
    na += a;
    da += 1;
    ns += shows * a;
    ds += shows;
    nc += clicks * a;
    dc += clicks;
  }
  r.gauc_avg = na / da;
  r.gauc_show = ns / ds;
  r.gauc_click = nc / dc;
  return r;
}

// Up to `max_users` users with up to `max_per_user` samples each. Scores are
// coarse so ties occur; at least one user has both classes.
inline std::vector<ScoredExposure> random_scored(std::uint64_t seed, std::size_t max_users,
                                                 std::size_t max_per_user) {
  Rng rng(seed);
  std::vector<ScoredExposure> out;
  const std::size_t users = 1 + rng.index(max_users);
  for (std::uint32_t u = 0; u < users; ++u) {
    const std::size_t n = 1 + rng.index(max_per_user);
    const double p = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back({u * 3, static_cast<std::uint8_t>(rng.bernoulli(p)), std::round(rng.uniform() * 20) / 20});
    }
  }
  out.push_back({0, 1, 0.5});
  out.push_back({0, 0, 0.25});
  // Shuffle so users are interleaved.
  for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.index(i)]);
  return out;
}

}  // namespace usd::test
