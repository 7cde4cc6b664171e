// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "usd/error.hpp"

namespace usd {

namespace {

constexpr std::array<std::string_view, 6> kVariantNames = {"base", "usd", "wo_ps", "wo_d", "wo_p", "wo_b"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Field {
  std::string name;
  std::string accepts;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

using Sections = std::vector<std::pair<std::string, std::vector<Field>>>;

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const std::string& accepts) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'; expected " +
                    accepts);
}

template <typename T, typename Get>
Field unsigned_field(std::string name, Get get) {
  Field f{name, "a non-negative integer", nullptr, nullptr};
  f.set = [name, get](ExperimentConfig& c, std::string_view v) {
    std::uint64_t x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
      bad_value(name, v, "a non-negative integer");
    }
    get(c) = static_cast<T>(x);
  };
  f.get = [get](const ExperimentConfig& c) { return std::to_string(get(const_cast<ExperimentConfig&>(c))); };
  return f;
}

template <typename Get>
Field size_field(std::string name, Get get) {
  return unsigned_field<std::size_t>(std::move(name), get);
}

template <typename Get>
Field real_field(std::string name, Get get) {
  Field f{name, "a real number", nullptr, nullptr};
  f.set = [name, get](ExperimentConfig& c, std::string_view v) {
    double x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(x)) {
      bad_value(name, v, "a real number");
    }
    get(c) = x;
  };
  f.get = [get](const ExperimentConfig& c) { return format_double(get(const_cast<ExperimentConfig&>(c))); };
  return f;
}

template <typename E, std::size_t N, typename Get>
Field enum_field(std::string name, std::array<std::pair<std::string_view, E>, N> options, Get get) {
  std::string accepts = "one of {";
  for (std::size_t i = 0; i < N; ++i) accepts += (i ? ", " : "") + std::string(options[i].first);
  accepts += "}";
  Field f{name, accepts, nullptr, nullptr};
  f.set = [name, options, accepts, get](ExperimentConfig& c, std::string_view v) {
    for (const auto& [text, value] : options) {
      if (text == v) {
        get(c) = value;
        return;
      }
    }
    bad_value(name, v, accepts);
  };
  f.get = [options, get](const ExperimentConfig& c) {
    for (const auto& [text, value] : options) {
      if (value == get(const_cast<ExperimentConfig&>(c))) return std::string(text);
    }
    return std::string("?");
  };
  return f;
}

#define USD_REF(expr) [](ExperimentConfig& c) -> auto& { return expr; }

const Sections& sections() {
  static const Sections s = [] {
    Sections out;
    out.push_back({"world",
                   {
                       size_field("users", USD_REF(c.world.users)),
                       size_field("items", USD_REF(c.world.items)),
                       size_field("item_dim", USD_REF(c.world.item_dim)),
                       size_field("item_categories", USD_REF(c.world.item_categories)),
                       size_field("days", USD_REF(c.world.days)),
                       size_field("exposures_per_user_day", USD_REF(c.world.exposures_per_user_day)),
                       real_field("portal_alpha", USD_REF(c.world.portal_alpha)),
                       real_field("portal_beta", USD_REF(c.world.portal_beta)),
                       real_field("block_alpha", USD_REF(c.world.block_alpha)),
                       real_field("block_beta", USD_REF(c.world.block_beta)),
                       real_field("item_scale", USD_REF(c.world.item_scale)),
                       real_field("item_bias_mean", USD_REF(c.world.item_bias_mean)),
                       real_field("item_bias_sd", USD_REF(c.world.item_bias_sd)),
                       real_field("coupling", USD_REF(c.world.coupling)),
                       unsigned_field<std::uint64_t>("seed", USD_REF(c.world.seed)),
                       size_field("threads", USD_REF(c.world.threads)),
                   }});
    out.push_back({"model",
                   {
                       size_field("uiem_dim", USD_REF(c.model.uiem.dim)),
                       size_field("uiem_layers", USD_REF(c.model.uiem.layers)),
                       size_field("uiem_heads", USD_REF(c.model.uiem.heads)),
                       size_field("uiem_ffn", USD_REF(c.model.uiem.ffn)),
                       enum_field("uiem_readout",
                                  std::array<std::pair<std::string_view, Readout>, 2>{
                                      {{"last", Readout::last}, {"mean", Readout::mean}}},
                                  USD_REF(c.model.uiem.readout)),
                       enum_field("uiem_pooling",
                                  std::array<std::pair<std::string_view, Pooling>, 2>{
                                      {{"mean", Pooling::mean}, {"sum", Pooling::sum}}},
                                  USD_REF(c.model.uiem.pooling)),
                       size_field("ctr_dim", USD_REF(c.model.ctr_dim)),
                       size_field("ctr_hidden", USD_REF(c.model.ctr_hidden)),
                       size_field("behavior_len", USD_REF(c.model.behavior_len)),
                   }});
    std::array<std::pair<std::string_view, Variant>, 6> variants{};
    for (std::size_t i = 0; i < 6; ++i) variants[i] = {kVariantNames[i], kAllVariants[i]};
    out.push_back({"train",
                   {
                       enum_field("variant", variants, USD_REF(c.train.variant)),
                       real_field("alpha", USD_REF(c.train.alpha)),
                       real_field("beta", USD_REF(c.train.beta)),
                       real_field("clip_lo", USD_REF(c.train.clip.lo)),
                       real_field("clip_hi", USD_REF(c.train.clip.hi)),
                       real_field("learning_rate", USD_REF(c.train.optimizer.learning_rate)),
                       real_field("decay", USD_REF(c.train.optimizer.decay)),
                       real_field("epsilon", USD_REF(c.train.optimizer.epsilon)),
                       real_field("accumulator_init", USD_REF(c.train.optimizer.accumulator_init)),
                       size_field("batch_size_ctr", USD_REF(c.train.batch_size_ctr)),
                       size_field("batch_size_uiem", USD_REF(c.train.batch_size_uiem)),
                       size_field("epochs", USD_REF(c.train.epochs)),
                       unsigned_field<std::uint64_t>("seed", USD_REF(c.train.seed)),
                       enum_field("uiem_mode",
                                  std::array<std::pair<std::string_view, UiemMode>, 2>{
                                      {{"cotrain", UiemMode::cotrain}, {"pretrain", UiemMode::pretrain}}},
                                  USD_REF(c.train.uiem_mode)),
                       size_field("pretrain_epochs", USD_REF(c.train.pretrain_epochs)),
                   }});
    out.push_back({"eval",
                   {
                       size_field("eval_days", USD_REF(c.eval.eval_days)),
                       enum_field("set",
                                  std::array<std::pair<std::string_view, EvalSet>, 2>{
                                      {{"sampled", EvalSet::sampled}, {"full", EvalSet::full}}},
                                  USD_REF(c.eval.set)),
                       size_field("threads", USD_REF(c.eval.threads)),
                   }});
    return out;
  }();
  return s;
}

#undef USD_REF

std::string section_list() {
  std::string s;
  for (const auto& [name, fields] : sections()) s += (s.empty() ? "" : ", ") + ("[" + name + "]");
  return s;
}

}  // namespace

std::string_view variant_name(Variant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

std::string variant_list() {
  std::string s;
  for (auto n : kVariantNames) s += (s.empty() ? "" : ", ") + std::string(n);
  return s;
}

Variant parse_variant(std::string_view name) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == name) return kAllVariants[i];
  }
  throw UsageError("unknown variant '" + std::string(name) + "'; expected one of: " + variant_list());
}

void TrainConfig::validate() const {
  if (!(clip.lo >= 1.0 && clip.lo <= clip.hi)) throw ConfigError("train.clip_lo/clip_hi must satisfy 1 <= clip_lo <= clip_hi");
  if (!(alpha >= 0 && beta >= 0)) throw ConfigError("train.alpha and train.beta must be >= 0");
  if (!(optimizer.learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
  if (!(optimizer.decay > 0 && optimizer.decay <= 1)) throw ConfigError("train.decay must be in (0, 1]");
  if (!(optimizer.epsilon >= 0)) throw ConfigError("train.epsilon must be >= 0");
  if (!(optimizer.accumulator_init >= 0)) throw ConfigError("train.accumulator_init must be >= 0");
  if (batch_size_ctr == 0 || batch_size_uiem == 0) throw ConfigError("train batch sizes must be > 0");
}

void ExperimentConfig::validate() const {
  world.validate();
  model.uiem.validate();
  if (model.ctr_dim == 0 || model.ctr_hidden == 0 || model.behavior_len == 0) {
    throw ConfigError("model.ctr_dim, ctr_hidden and behavior_len must be > 0");
  }
  if (model.uiem.seq_len != kSeqLen) throw ConfigError("uiem sequence length must be " + std::to_string(kSeqLen));
  train.validate();
  if (eval.eval_days == 0) throw ConfigError("eval.eval_days must be > 0");
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  ExperimentConfig c;
  const std::vector<Field>* current = nullptr;
  std::string section;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      current = nullptr;
      for (const auto& [name, fields] : sections()) {
        if (name == section) current = &fields;
      }
      if (!current) throw ConfigError(where + "unknown section [" + section + "]; accepted: " + section_list());
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    if (!current) throw ConfigError(where + "key outside a section; start with one of " + section_list());
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const auto& f : *current) {
      if (f.name == key) field = &f;
    }
    if (!field) {
      std::string accepted;
      for (const auto& f : *current) accepted += (accepted.empty() ? "" : ", ") + f.name;
      throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]; accepted keys: " + accepted);
    }
    if (!seen.insert(section + "." + key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      field->set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + "[" + section + "] " + e.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [name, fields] : sections()) {
    if (!out.empty()) out += '\n';
    out += "[" + name + "]\n";
    for (const auto& f : fields) out += f.name + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace usd
