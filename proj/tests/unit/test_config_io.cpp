// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "usd/checkpoint.hpp"
#include "usd/config.hpp"
#include "usd/error.hpp"
#include "usd/manifest.hpp"
#include "usd/uiem.hpp"

using namespace usd;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("config defaults carry the training constants") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.train.alpha == 1e-4);
  CHECK(c.train.beta == 1e-4);
  CHECK(c.train.clip.lo == 1.0);
  CHECK(c.train.clip.hi == 15.0);
  CHECK(c.train.optimizer.learning_rate == 0.01);
  CHECK(c.train.optimizer.decay == 0.9999);
  CHECK(c.train.optimizer.epsilon == 1e-8);
  CHECK(c.train.optimizer.accumulator_init == 0.1);
  CHECK(c.train.batch_size_ctr == 256);
  CHECK(c.train.batch_size_uiem == 256);
  CHECK(c.train.epochs == 5);
  CHECK(c.model.uiem.dim == 16);
  CHECK(c.model.uiem.layers == 1);
  CHECK(c.model.uiem.heads == 2);
  CHECK(c.model.uiem.ffn == 32);
  CHECK(c.model.behavior_len == 20);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(
      "# comment\n[world]\nusers = 10\ndays = 40\n\n[train]\nvariant = wo_ps\nalpha = 0.5\n"
      "uiem_mode = pretrain\n[model]\nuiem_readout = mean\nuiem_pooling = sum\n[eval]\nset = full\n");
  CHECK(c.world.users == 10);
  CHECK(c.world.days == 40);
  CHECK(c.train.variant == Variant::wo_ps);
  CHECK(c.train.alpha == 0.5);
  CHECK(c.train.uiem_mode == UiemMode::pretrain);
  CHECK(c.model.uiem.readout == Readout::mean);
  CHECK(c.model.uiem.pooling == Pooling::sum);
  CHECK(c.eval.set == EvalSet::full);
  CHECK(parse_config(to_text(c)).train.alpha == 0.5);
  CHECK(to_text(parse_config(to_text(c))) == to_text(c));
}

TEST_CASE("config errors name the key and what it accepts") {
  std::string e = config_error("[train]\nlearnig_rate = 0.1\n");
  CHECK(contains(e, "learnig_rate"));
  CHECK(contains(e, "learning_rate"));
  e = config_error("[train]\nvariant = fancy\n");
  CHECK(contains(e, "fancy"));
  CHECK(contains(e, "wo_ps"));
  e = config_error("[world]\nusers = 0\n");
  CHECK(contains(e, "users"));
  e = config_error("[world]\nusers = ten\n");
  CHECK(contains(e, "users"));
  CHECK(contains(e, "integer"));
  e = config_error("[nope]\n");
  CHECK(contains(e, "[world]"));
  e = config_error("[train]\nalpha = 1\nalpha = 2\n");
  CHECK(contains(e, "duplicate"));
  e = config_error("users = 3\n");
  CHECK_FALSE(e.empty());
  e = config_error("[train]\nclip_lo = 0.5\n");
  CHECK(contains(e, "clip_lo"));
  e = config_error("[train]\nlearning_rate = 0\n");
  CHECK(contains(e, "learning_rate"));
  e = config_error("[model]\nuiem_dim = 15\nuiem_heads = 2\n");
  CHECK(contains(e, "divisible"));
  CHECK_THROWS_AS(parse_variant("nope"), UsageError);
  for (Variant v : kAllVariants) CHECK(parse_variant(variant_name(v)) == v);
}

TEST_CASE("checkpoint round trip is exact") {
  UiemConfig c;
  c.dim = 8;
  c.ffn = 8;
  ParameterSet p = Uiem(c).init(4);
  p.get("uiem.pos_emb")[0] = 0.1 + 0.2;  // not representable in 17 digits of decimal
  p.get("uiem.pos_emb")[1] = -1e-300;
  std::stringstream ss;
  write_checkpoint(p, ss);
  CHECK(read_checkpoint(ss) == p);

  const auto dir = test::scratch_dir("ckpt");
  write_checkpoint(p, dir / "a.ckpt");
  CHECK(read_checkpoint(dir / "a.ckpt") == p);
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST_CASE("corrupted checkpoints are format errors") {
  ParameterSet p;
  p.add("a", Tensor({2}, {1.0, 2.0}));
  std::stringstream ok;
  write_checkpoint(p, ok);
  const std::string text = ok.str();
  for (const std::string& bad : {std::string("USD-CKPT v2\na 1 2 1 2\n"), std::string("garbage"),
                                 text.substr(0, text.size() - 3), std::string("USD-CKPT v1\na 1 2 1 x\n"),
                                 std::string("USD-CKPT v1\na 1 2 1 2 3\n"), std::string("")}) {
    std::stringstream in(bad);
    CHECK_THROWS_AS(read_checkpoint(in), FormatError);
  }
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.command = "train";
  m.config = to_text(ExperimentConfig{});
  m.variant = "usd";
  m.seed = 3;
  m.inputs["data"] = "/tmp/x";
  m.outputs["checkpoint"] = "/tmp/y/checkpoint.ckpt";
  m.digests["exposures.tsv"] = fnv1a_hex("abc");
  m.timings_ms["train"] = 12.5;
  m.counts["steps"] = 7;
  m.run_id = make_run_id(m);
  const auto dir = test::scratch_dir("manifest");
  write_manifest(m, dir / "manifest.json");
  const RunManifest back = read_manifest(dir / "manifest.json");
  CHECK(back.run_id == m.run_id);
  CHECK(back.config == m.config);
  CHECK(back.seed == 3);
  CHECK(back.inputs == m.inputs);
  CHECK(back.digests == m.digests);
  CHECK(back.counts == m.counts);
  CHECK(back.timings_ms == m.timings_ms);
  CHECK(make_run_id(back) == m.run_id);
  // Known FNV-1a 64 vectors.
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");

  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(read_manifest(dir / "bad.json"), FormatError);
}
