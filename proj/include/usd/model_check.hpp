// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Finite-difference check of the joint objective on tiny models: a UIEM with
// d = 8, T = 8 and one layer, and a CTR model with d = 8 and 4 behavior slots,
// on a random batch. Debias weights are computed once from the unperturbed
// UIEM, matching their detached role in training.

#pragma once

#include <cstdint>

#include "usd/debias.hpp"
#include "usd/gradcheck.hpp"

namespace usd {

struct ModelCheckOptions {
  double alpha = 1.0;
  double beta = 1.0;
  ClipRange clip;
  GradCheckOptions check;
};

GradCheckReport check_final_loss(std::uint64_t seed, const ModelCheckOptions& options = {});

}  // namespace usd
