// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment configuration and its text format.
//
//   # comment
//   [train]
//   variant = usd
//   alpha = 0.0001
//
// Sections are [world], [model], [train] and [eval]. Every key is optional
// and defaults to the value below; unknown sections or keys, duplicates and
// malformed values are ConfigErrors that name the key and what it accepts.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "usd/debias.hpp"
#include "usd/uiem.hpp"
#include "usd/world.hpp"

namespace usd {

enum class Variant { base, usd, wo_ps, wo_d, wo_p, wo_b };

inline constexpr std::array<Variant, 6> kAllVariants = {Variant::base, Variant::usd,  Variant::wo_ps,
                                                        Variant::wo_d, Variant::wo_p, Variant::wo_b};

std::string_view variant_name(Variant v);
// Throws UsageError listing the accepted names.
Variant parse_variant(std::string_view name);
std::string variant_list();

enum class UiemMode { cotrain, pretrain };
enum class EvalSet { sampled, full };

struct ModelConfig {
  UiemConfig uiem;
  std::size_t ctr_dim = 16;
  std::size_t ctr_hidden = 32;
  std::size_t behavior_len = 20;
};

struct TrainConfig {
  Variant variant = Variant::usd;
  double alpha = 1e-4;
  double beta = 1e-4;
  ClipRange clip;
  AdagradOptions optimizer;
  std::size_t batch_size_ctr = 256;
  std::size_t batch_size_uiem = 256;
  std::size_t epochs = 5;
  std::uint64_t seed = 1;
  UiemMode uiem_mode = UiemMode::cotrain;
  // UIEM-only epochs over the UIEM set before the CTR model trains, in
  // pretrain mode. The UIEM is frozen afterwards.
  std::size_t pretrain_epochs = 5;

  void validate() const;
};

struct EvalConfig {
  // The last eval_days label days are held out from training.
  std::size_t eval_days = 8;
  EvalSet set = EvalSet::sampled;
  std::size_t threads = 1;
};

struct ExperimentConfig {
  WorldConfig world;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;

  void validate() const;
};

ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical text with every key; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

}  // namespace usd
