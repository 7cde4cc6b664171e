// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "usd/graph.hpp"
#include "usd/rng.hpp"

namespace usd::test {

inline Tensor random_tensor(Rng& rng, Shape shape, double sd = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.normal(0.0, sd);
  return t;
}

// Scalar readout sum_i r_i x_i / n with fixed random r, so every output
// element gets a distinct gradient.
inline NodeId probe_sum(Graph& g, NodeId x, std::uint64_t seed) {
  Rng rng(seed);
  const Shape shape = g.value(x).shape();
  const NodeId r = g.constant(random_tensor(rng, shape));
  const NodeId prod = g.mul(x, r);
  return g.mean(g.reshape(prod, {shape_size(shape)}), 0);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("usd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace usd::test
