// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Text checkpoint format:
//
//   USD-CKPT v1
//   <name> <rank> <dim...> <value...>
//
// one line per parameter, values printed with 17 significant digits so a
// round trip is exact.

#pragma once

#include <filesystem>
#include <iosfwd>

#include "usd/graph.hpp"

namespace usd {

inline constexpr const char* kCheckpointHeader = "USD-CKPT v1";

void write_checkpoint(const ParameterSet& params, std::ostream& out);
void write_checkpoint(const ParameterSet& params, const std::filesystem::path& path);

// Throws FormatError on a wrong header or malformed line.
ParameterSet read_checkpoint(std::istream& in, const std::string& source = "<stream>");
ParameterSet read_checkpoint(const std::filesystem::path& path);

}  // namespace usd
