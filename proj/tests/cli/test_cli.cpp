// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end checks that drive the usdlab binary.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "usd/checkpoint.hpp"
#include "usd/config.hpp"
#include "usd/trainer.hpp"
#include "usd/ctr_model.hpp"
#include "usd/dataset_io.hpp"
#include "usd/uiem.hpp"

namespace fs = std::filesystem;
using namespace usd;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "usd_cli_tests";

constexpr const char* kTinyConfig = R"([world]
users = 60
items = 30
days = 45
seed = 4

[model]
uiem_dim = 8
uiem_ffn = 16
ctr_dim = 8
ctr_hidden = 8
behavior_len = 5

[train]
batch_size_ctr = 64
batch_size_uiem = 32
epochs = 1

[eval]
eval_days = 4
)";

int run(const std::string& args) {
  const std::string cmd = std::string(USDLAB_BIN) + " " + args + " >> " + (kRoot / "log.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh directory with the tiny config and a generated world at data/.
struct Workspace {
  fs::path dir;
  fs::path config;
  fs::path data;

  explicit Workspace(const std::string& name) : dir(kRoot / name), config(dir / "tiny.ini"), data(dir / "data") {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(config) << kTinyConfig;
    REQUIRE(run("gen --config " + config.string() + " --out " + data.string()) == 0);
  }
  std::string arg(const fs::path& p) const { return p.string(); }
};

}  // namespace

TEST_CASE("validation errors exit 1") {
  Workspace w("validation");
  CHECK(run("train --data " + w.arg(w.data) + " --variant fancy --out " + w.arg(w.dir / "t")) == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("train --out " + w.arg(w.dir / "t")) == 1);  // --data is required
  std::ofstream(w.dir / "bad.ini") << "[world]\nusers = 0\n";
  CHECK(run("gen --config " + w.arg(w.dir / "bad.ini") + " --out " + w.arg(w.dir / "g")) == 1);
  std::ofstream(w.dir / "typo.ini") << "[train]\nlearnig_rate = 0.1\n";
  CHECK(run("train --config " + w.arg(w.dir / "typo.ini") + " --data " + w.arg(w.data) + " --out " +
            w.arg(w.dir / "t")) == 1);
}

TEST_CASE("runtime failures exit 2") {
  Workspace w("runtime");
  CHECK(run("train --config " + w.arg(w.config) + " --data " + w.arg(w.dir / "nowhere") + " --out " +
            w.arg(w.dir / "t")) == 2);
  CHECK(run("eval --checkpoint " + w.arg(w.dir / "missing.ckpt") + " --data " + w.arg(w.data) + " --out " +
            w.arg(w.dir / "e")) == 2);

  REQUIRE(run("train --config " + w.arg(w.config) + " --data " + w.arg(w.data) + " --out " + w.arg(w.dir / "t")) ==
          0);
  std::string ckpt = slurp(w.dir / "t" / "checkpoint.ckpt");
  ckpt[0] = 'X';
  std::ofstream(w.dir / "t" / "checkpoint.ckpt", std::ios::binary) << ckpt;
  CHECK(run("eval --checkpoint " + w.arg(w.dir / "t" / "checkpoint.ckpt") + " --data " + w.arg(w.data) +
            " --out " + w.arg(w.dir / "e")) == 2);
}

TEST_CASE("gen on a minimal config writes a valid dataset") {
  const fs::path dir = kRoot / "minimal";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "min.ini") << "[world]\nusers = 10\ndays = 40\n";
  REQUIRE(run("gen --config " + (dir / "min.ini").string() + " --out " + (dir / "data").string()) == 0);
  for (const char* f : {"exposures.tsv", "contexts.tsv", "world.meta", "manifest.json"}) CHECK(fs::exists(dir / "data" / f));
  const Dataset ds = read_dataset(dir / "data");
  CHECK(ds.exposures.size() == 10 * 40 * 2);
  CHECK(ds.contexts.size() == 10 * (40 - kFirstLabelDay));
  for (const auto& c : ds.contexts) {
    if (c.y_b) CHECK(c.y_p == 1);
  }
  for (const auto& r : ds.exposures) {
    if (r.label == 0 || r.day < kFirstLabelDay) continue;
    const auto it = std::find_if(ds.contexts.begin(), ds.contexts.end(),
                                 [&](const auto& c) { return c.user_id == r.user_id && c.day == r.day; });
    REQUIRE(it != ds.contexts.end());
    CHECK(it->y_b == 1);
  }
}

TEST_CASE("gen is byte-identical across runs and thread counts") {
  Workspace w("gen");
  REQUIRE(run("gen --config " + w.arg(w.config) + " --threads 3 --out " + w.arg(w.dir / "again")) == 0);
  for (const char* f : {"exposures.tsv", "contexts.tsv", "world.meta"}) {
    CHECK(slurp(w.data / f) == slurp(w.dir / "again" / f));
    CHECK_FALSE(slurp(w.data / f).empty());
  }
}

TEST_CASE("train with zero epochs writes the initialization") {
  Workspace w("epochs0");
  std::string text = slurp(w.config);
  text.replace(text.find("epochs = 1"), 10, "epochs = 0");
  std::ofstream(w.dir / "zero.ini") << text;
  REQUIRE(run("train --config " + w.arg(w.dir / "zero.ini") + " --data " + w.arg(w.data) + " --out " +
              w.arg(w.dir / "t")) == 0);
  const ParameterSet written = read_checkpoint(w.dir / "t" / "checkpoint.ckpt");
  const ExperimentConfig c = load_config(w.dir / "zero.ini");
  const Dataset ds = read_dataset(w.data);
  Trainer trainer(ds, c);
  CHECK(written == trainer.init());
}

TEST_CASE("train then eval is reproducible") {
  Workspace w("eval");
  const std::string train = "train --config " + w.arg(w.config) + " --data " + w.arg(w.data) + " --variant wo_p";
  REQUIRE(run(train + " --out " + w.arg(w.dir / "t1")) == 0);
  REQUIRE(run(train + " --out " + w.arg(w.dir / "t2")) == 0);
  CHECK(slurp(w.dir / "t1" / "checkpoint.ckpt") == slurp(w.dir / "t2" / "checkpoint.ckpt"));
  CHECK(slurp(w.dir / "t1" / "losses.csv") == slurp(w.dir / "t2" / "losses.csv"));

  const std::string eval = "eval --checkpoint " + w.arg(w.dir / "t1" / "checkpoint.ckpt") + " --data " +
                           w.arg(w.data);
  REQUIRE(run(eval + " --out " + w.arg(w.dir / "e1")) == 0);
  REQUIRE(run(eval + " --threads 4 --out " + w.arg(w.dir / "e2")) == 0);
  const std::string metrics = slurp(w.dir / "e1" / "metrics.csv");
  CHECK(metrics == slurp(w.dir / "e2" / "metrics.csv"));
  CHECK(metrics.find("\nwo_p,") != std::string::npos);
  std::istringstream row(metrics.substr(metrics.find('\n') + 1));
  std::string field;
  std::getline(row, field, ',');
  for (int i = 0; i < 4; ++i) {
    std::getline(row, field, ',');
    const double v = std::stod(field);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("ablate writes one row per variant") {
  Workspace w("ablate");
  REQUIRE(run("ablate --config " + w.arg(w.config) + " --data " + w.arg(w.data) + " --seeds 1 --out " +
              w.arg(w.dir / "a")) == 0);
  std::istringstream table(slurp(w.dir / "a" / "ablation.csv"));
  std::string line;
  int rows = 0;
  std::getline(table, line);
  while (std::getline(table, line)) {
    ++rows;
    CHECK(line.ends_with(",ok"));
  }
  CHECK(rows == 6);
}

TEST_CASE("gradcheck passes and catches an injected fault") {
  Workspace w("gradcheck");
  CHECK(run("gradcheck --seeds 1 --out " + w.arg(w.dir / "g")) == 0);
  const std::string report = slurp(w.dir / "g" / "gradcheck.txt");
  CHECK(report.ends_with("PASS\n"));
  // Every tensor of the tiny models appears in the report.
  UiemConfig uc;
  uc.dim = 8;
  uc.ffn = 16;
  uc.seq_len = 8;
  ParameterSet params = Uiem(uc).init(1);
  params.merge(CtrModel(CtrConfig{5, 7, 8, 8, 4}).init(1));
  for (const auto& name : params.names()) CHECK_MESSAGE(report.find(name + " ") != std::string::npos, name);
  CHECK(run("gradcheck --seeds 1 --inject-fault --out " + w.arg(w.dir / "f")) == 2);
  CHECK(slurp(w.dir / "f" / "gradcheck.txt").ends_with("FAIL\n"));
}
