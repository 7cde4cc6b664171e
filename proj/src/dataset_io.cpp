// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "usd/error.hpp"

namespace usd {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kExposureHeader = "user_id\titem_id\tday\tlabel\titem_feature_id";
constexpr std::string_view kContextHeader = "user_id\tday\ty_p\ty_b\tr_p\tsequence";

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

class LineParser {
 public:
  LineParser(std::string source, std::size_t line) : source_(std::move(source)), line_(line) {}

  template <typename T>
  T integer(std::string_view text, const char* field, long long lo, long long hi) const {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
      throw ParseError(source_, line_, field, "expected an integer, got '" + std::string(text) + "'");
    }
    if (v < lo || v > hi) {
      throw ParseError(source_, line_, field,
                       "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<T>(v);
  }

  void expect_fields(const std::vector<std::string_view>& f, std::size_t n, const char* const* names) const {
    if (f.size() < n) {
      throw ParseError(source_, line_, names[f.size()],
                       "missing (line has " + std::to_string(f.size()) + " of " + std::to_string(n) + " fields)");
    }
    if (f.size() > n) throw ParseError(source_, line_, "<end>", "unexpected extra fields");
  }

 private:
  std::string source_;
  std::size_t line_;
};

constexpr long long kMaxId = 0xffffffffLL;

void read_header(std::istream& in, const std::string& source, std::string_view header) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "<header>", "file is empty");
  if (line != header) throw ParseError(source, 1, "<header>", "expected '" + std::string(header) + "'");
}

void apply_meta(const fs::path& path, Dataset& ds) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
      return s;
    };
    const std::string_view key = trim(std::string_view(line).substr(0, eq));
    const std::string_view val = trim(std::string_view(line).substr(eq + 1));
    std::size_t* slot = key == "users" ? &ds.num_users : key == "items" ? &ds.num_items : key == "days" ? &ds.num_days : nullptr;
    if (!slot) continue;
    const auto v = LineParser(path.string(), lineno).integer<std::size_t>(val, std::string(key).c_str(), 0, kMaxId);
    if (v < *slot) {
      throw IntegrityError(path.string() + ": " + std::string(key) + " = " + std::to_string(v) +
                           " is smaller than the data requires (" + std::to_string(*slot) + ")");
    }
    *slot = v;
  }
}

}  // namespace

void write_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / kExposuresFile);
    out << kExposureHeader << '\n';
    std::string buf;
    for (const auto& r : ds.exposures) {
      buf.clear();
      buf += std::to_string(r.user_id);
      buf += '\t';
      buf += std::to_string(r.item_id);
      buf += '\t';
      buf += std::to_string(r.day);
      buf += '\t';
      buf += std::to_string(r.label);
      buf += '\t';
      buf += std::to_string(r.item_feature_id);
      buf += '\n';
      out << buf;
    }
    if (!out) throw IoError("write failed: " + (dir / kExposuresFile).string());
  }
  {
    auto out = open_out(dir / kContextsFile);
    out << kContextHeader << '\n';
    std::string buf;
    for (const auto& c : ds.contexts) {
      buf.clear();
      buf += std::to_string(c.user_id);
      buf += '\t';
      buf += std::to_string(c.day);
      buf += '\t';
      buf += std::to_string(c.y_p);
      buf += '\t';
      buf += std::to_string(c.y_b);
      buf += '\t';
      buf += std::to_string(c.r_p);
      buf += '\t';
      for (std::size_t t = 0; t < kSeqLen; ++t) {
        if (t) buf += ',';
        buf += std::to_string(static_cast<int>(c.sequence[t]));
      }
      buf += '\n';
      out << buf;
    }
    if (!out) throw IoError("write failed: " + (dir / kContextsFile).string());
  }
}

Dataset read_dataset(const fs::path& dir) {
  Dataset ds;
  {
    const fs::path path = dir / kExposuresFile;
    auto in = open_in(path);
    const std::string source = path.string();
    read_header(in, source, kExposureHeader);
    static const char* const names[] = {"user_id", "item_id", "day", "label", "item_feature_id"};
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto f = split(line, '\t');
      LineParser p(source, lineno);
      p.expect_fields(f, 5, names);
      ExposureRecord r;
      r.user_id = p.integer<std::uint32_t>(f[0], names[0], 0, kMaxId);
      r.item_id = p.integer<std::uint32_t>(f[1], names[1], 0, kMaxId);
      r.day = p.integer<std::uint32_t>(f[2], names[2], 0, kMaxId);
      r.label = p.integer<std::uint8_t>(f[3], names[3], 0, 1);
      r.item_feature_id = p.integer<std::uint32_t>(f[4], names[4], 0, kMaxId);
      ds.exposures.push_back(r);
      ds.num_users = std::max<std::size_t>(ds.num_users, r.user_id + 1ULL);
      ds.num_items = std::max<std::size_t>(ds.num_items, r.item_id + 1ULL);
      ds.num_days = std::max<std::size_t>(ds.num_days, r.day + 1ULL);
    }
  }
  {
    const fs::path path = dir / kContextsFile;
    auto in = open_in(path);
    const std::string source = path.string();
    read_header(in, source, kContextHeader);
    static const char* const names[] = {"user_id", "day", "y_p", "y_b", "r_p", "sequence"};
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto f = split(line, '\t');
      LineParser p(source, lineno);
      p.expect_fields(f, 6, names);
      UserDayContext c;
      c.user_id = p.integer<std::uint32_t>(f[0], names[0], 0, kMaxId);
      c.day = p.integer<std::uint32_t>(f[1], names[1], 0, kMaxId);
      c.y_p = p.integer<std::uint8_t>(f[2], names[2], 0, 1);
      c.y_b = p.integer<std::uint8_t>(f[3], names[3], 0, 1);
      c.r_p = p.integer<std::uint8_t>(f[4], names[4], 0, 1);
      const auto toks = split(f[5], ',');
      if (toks.size() != kSeqLen) {
        throw ParseError(source, lineno, names[5],
                         "expected " + std::to_string(kSeqLen) + " tokens, got " + std::to_string(toks.size()));
      }
      for (std::size_t t = 0; t < kSeqLen; ++t) c.sequence[t] = p.integer<std::int8_t>(toks[t], names[5], -1, 1);
      ds.contexts.push_back(c);
      ds.num_users = std::max<std::size_t>(ds.num_users, c.user_id + 1ULL);
      ds.num_days = std::max<std::size_t>(ds.num_days, c.day + 1ULL);
    }
  }
  apply_meta(dir / kWorldMetaFile, ds);
  return ds;
}

}  // namespace usd
