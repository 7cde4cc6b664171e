// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "usd/graph.hpp"

namespace usd {

inline double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

// e(y, p) = -y log p - (1 - y) log(1 - p), with p clamped first.
inline double binary_cross_entropy(double y, double p) {
  const double q = clamp_prob(p);
  return -y * std::log(q) - (1.0 - y) * std::log(1.0 - q);
}

}  // namespace usd
