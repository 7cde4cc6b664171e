// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// On-disk dataset layout (UTF-8, tab-separated, one header line each):
//
//   exposures.tsv   user_id  item_id  day  label  item_feature_id
//   contexts.tsv    user_id  day  y_p  y_b  r_p  sequence
//
// `sequence` is 30 comma-separated tokens from {-1,0,1}, oldest day first.
// An optional world.meta (key = value lines) in the same directory supplies
// users / items / days; otherwise they are inferred from the largest ids.

#pragma once

#include <filesystem>

#include "usd/world.hpp"

namespace usd {

inline constexpr const char* kExposuresFile = "exposures.tsv";
inline constexpr const char* kContextsFile = "contexts.tsv";
inline constexpr const char* kWorldMetaFile = "world.meta";

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace usd
