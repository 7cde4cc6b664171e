// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "usd/error.hpp"

namespace usd {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

std::string make_run_id(const RunManifest& m) {
  return m.command + "-" + fnv1a_hex(m.command + "\n" + m.variant + "\n" + m.config).substr(0, 12);
}

void write_manifest(const RunManifest& m, const fs::path& path) {
  json j;
  j["run_id"] = m.run_id;
  j["command"] = m.command;
  j["variant"] = m.variant;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["digests"] = m.digests;
  j["outputs"] = m.outputs;
  j["timings_ms"] = m.timings_ms;
  j["counts"] = m.counts;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

RunManifest read_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  json j;
  try {
    in >> j;
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.variant = j.value("variant", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.config = j.at("config").get<std::string>();
    m.inputs = j.value("inputs", std::map<std::string, std::string>{});
    m.digests = j.value("digests", std::map<std::string, std::string>{});
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
    m.timings_ms = j.value("timings_ms", std::map<std::string, double>{});
    m.counts = j.value("counts", std::map<std::string, std::uint64_t>{});
    return m;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed manifest: " + e.what());
  }
}

}  // namespace usd
