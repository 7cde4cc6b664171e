// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Run manifest (manifest.json). The config snapshot is the canonical config
// text, so a manifest can be passed back as --config to repeat the run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace usd {

struct RunManifest {
  std::string run_id;
  std::string command;
  std::string config;  // canonical config text
  std::string variant;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // role -> path
  std::map<std::string, std::string> digests;  // file name -> fnv1a-64 hex
  std::map<std::string, std::string> outputs;  // role -> path
  std::map<std::string, double> timings_ms;
  std::map<std::string, std::uint64_t> counts;
};

// FNV-1a 64 over bytes, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

// run_id is derived from command, config and variant, never from the clock.
std::string make_run_id(const RunManifest& m);

void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace usd
