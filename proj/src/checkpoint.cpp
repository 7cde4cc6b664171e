// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "usd/error.hpp"

namespace usd {

void write_checkpoint(const ParameterSet& params, std::ostream& out) {
  out << kCheckpointHeader << '\n';
  char buf[32];
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params.at(i);
    out << params.names()[i] << ' ' << t.rank();
    for (std::size_t d : t.shape()) out << ' ' << d;
    for (double v : t.values()) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

void write_checkpoint(const ParameterSet& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(params, out);
  if (!out) throw IoError("write failed: " + path.string());
}

ParameterSet read_checkpoint(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointHeader) {
    throw FormatError(source + ": not a checkpoint (expected header '" + kCheckpointHeader + "')");
  }
  ParameterSet params;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name;
    std::size_t rank = 0;
    auto fail = [&](const std::string& what) {
      throw FormatError(source + ":" + std::to_string(lineno) + ": " + what);
    };
    if (!(ls >> name >> rank) || rank == 0 || rank > 8) fail("bad parameter name or rank");
    Shape shape(rank);
    for (auto& d : shape) {
      if (!(ls >> d) || d == 0) fail("bad shape for " + name);
    }
    std::vector<double> values(shape_size(shape));
    std::string tok;
    for (auto& v : values) {
      if (!(ls >> tok)) fail("too few values for " + name);
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) fail("bad value '" + tok + "' for " + name);
    }
    if (ls >> tok) fail("too many values for " + name);
    if (params.contains(name)) fail("duplicate parameter " + name);
    params.add(name, Tensor(std::move(shape), std::move(values)));
  }
  return params;
}

ParameterSet read_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in, path.string());
}

}  // namespace usd
