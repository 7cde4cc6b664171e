// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// usdlab: generate worlds, train and evaluate ablation arms, run the
// gradient check.
//
// Exit codes: 0 success, 1 validation error (bad flags, config, variant),
// 2 runtime failure (missing files, malformed data, failed arms or checks).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "usd/checkpoint.hpp"
#include "usd/config.hpp"
#include "usd/dataset_io.hpp"
#include "usd/error.hpp"
#include "usd/manifest.hpp"
#include "usd/metrics.hpp"
#include "usd/model_check.hpp"
#include "usd/parallel.hpp"
#include "usd/runtime.hpp"
#include "usd/trainer.hpp"
#include "usd/world.hpp"

namespace fs = std::filesystem;
using namespace usd;

namespace {

constexpr const char* kCheckpointFile = "checkpoint.ckpt";
constexpr const char* kLossesFile = "losses.csv";
constexpr const char* kMetricsFile = "metrics.csv";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kAblationFile = "ablation.csv";

struct Options {
  std::string config;
  std::string data;
  std::string variant;
  std::string out;
  std::string checkpoint;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> threads;
  std::size_t jobs = 1;
  bool inject_fault = false;
};

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Reads a config file, or the config snapshot of a manifest.json.
ExperimentConfig load_any_config(const std::string& path, std::string* variant_from_manifest = nullptr) {
  if (path.empty()) return ExperimentConfig{};
  if (fs::path(path).extension() == ".json") {
    const RunManifest m = read_manifest(path);
    if (variant_from_manifest) *variant_from_manifest = m.variant;
    return parse_config(m.config, path + " (config snapshot)");
  }
  return load_config(path);
}

void apply_threads(ExperimentConfig& c, const Options& o) {
  if (o.threads) {
    c.world.threads = *o.threads;
    c.eval.threads = *o.threads;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string format_losses(const std::vector<LossRow>& rows) {
  std::string s = "step,l_ctr,l_portal,l_block,l_final\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.step, r.l_ctr, r.l_portal, r.l_block,
                  r.l_final);
    s += buf;
  }
  return s;
}

void add_dataset_digests(RunManifest& m, const fs::path& dir) {
  for (const char* f : {kExposuresFile, kContextsFile}) m.digests[f] = file_digest(dir / f);
}

int cmd_gen(const Options& o) {
  Stopwatch sw;
  ExperimentConfig c = load_any_config(o.config);
  apply_threads(c, o);
  const fs::path out(o.out);
  const World world = generate_world(c.world, c.world.seed);
  const Dataset ds = simulate_world(world);
  write_dataset(ds, out);
  write_text(out / kWorldMetaFile, world_meta(c.world));

  RunManifest m;
  m.command = "gen";
  m.config = to_text(c);
  m.seed = c.world.seed;
  m.run_id = make_run_id(m);
  add_dataset_digests(m, out);
  m.outputs = {{"dataset", out.string()}};
  m.counts = {{"exposures", ds.exposures.size()}, {"contexts", ds.contexts.size()}};
  m.timings_ms["total"] = sw.ms();
  write_manifest(m, out / kManifestFile);
  std::cout << "wrote " << ds.exposures.size() << " exposures and " << ds.contexts.size() << " contexts to "
            << out.string() << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  Stopwatch sw;
  ExperimentConfig c = load_any_config(o.config);
  apply_threads(c, o);
  if (!o.variant.empty()) c.train.variant = parse_variant(o.variant);
  if (o.seeds.size() > 1) throw UsageError("train takes a single --seeds value");
  if (o.seeds.size() == 1) c.train.seed = o.seeds[0];

  const Dataset ds = read_dataset(o.data);
  const double load_ms = sw.ms();
  Trainer trainer(ds, c);
  const TrainResult r = trainer.run();
  const double train_ms = sw.ms() - load_ms;

  const fs::path out(o.out);
  fs::create_directories(out);
  write_checkpoint(r.params, out / kCheckpointFile);
  write_text(out / kLossesFile, format_losses(r.losses));

  RunManifest m;
  m.command = "train";
  m.config = to_text(c);
  m.variant = std::string(variant_name(c.train.variant));
  m.seed = c.train.seed;
  m.run_id = make_run_id(m);
  m.inputs = {{"data", o.data}};
  add_dataset_digests(m, o.data);
  m.outputs = {{"checkpoint", (out / kCheckpointFile).string()}, {"losses", (out / kLossesFile).string()}};
  m.counts = {{"ctr_rows", r.ctr_rows},
              {"uiem_rows", r.uiem_rows},
              {"train_exposures", trainer.split().train_exposures.size()},
              {"steps", r.losses.size()}};
  m.timings_ms = {{"load", load_ms}, {"train", train_ms}};
  write_manifest(m, out / kManifestFile);
  std::cout << "variant " << m.variant << ": " << r.losses.size() << " steps over " << r.ctr_rows
            << " CTR rows; checkpoint at " << (out / kCheckpointFile).string() << "\n";
  return 0;
}

int cmd_eval(const Options& o) {
  std::string variant = o.variant;
  std::string manifest_variant;
  std::string config_path = o.config;
  const fs::path beside = fs::path(o.checkpoint).parent_path() / kManifestFile;
  if (config_path.empty() && fs::exists(beside)) config_path = beside.string();
  ExperimentConfig c = load_any_config(config_path, &manifest_variant);
  apply_threads(c, o);
  if (variant.empty()) variant = manifest_variant.empty() ? "model" : manifest_variant;
  if (variant != "model") parse_variant(variant);

  const ParameterSet params = read_checkpoint(fs::path(o.checkpoint));
  const Dataset ds = read_dataset(o.data);
  const MetricsReport report = evaluate_params(params, ds, c);

  const fs::path out(o.out);
  fs::create_directories(out);
  write_text(out / kMetricsFile, std::string(kMetricsHeader) + "\n" + metrics_row(variant, report) + "\n");
  std::cout << kMetricsHeader << "\n" << metrics_row(variant, report) << "\n";
  return 0;
}

struct ArmResult {
  Variant variant = Variant::base;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport report;
  std::size_t ctr_rows = 0;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_ablate(const Options& o) {
  ExperimentConfig base = load_any_config(o.config);
  apply_threads(base, o);
  const std::vector<std::uint64_t> seeds = o.seeds.empty() ? std::vector<std::uint64_t>{base.train.seed} : o.seeds;
  const Dataset ds = read_dataset(o.data);

  std::vector<ArmResult> arms;
  for (std::uint64_t seed : seeds) {
    for (Variant v : kAllVariants) arms.push_back({v, seed, false, {}, {}, 0});
  }
  std::mutex log_mu;
  parallel_chunks(arms.size(), o.jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ArmResult& a = arms[i];
      Stopwatch sw;
      try {
        ExperimentConfig c = base;
        c.train.variant = a.variant;
        c.train.seed = a.seed;
        Trainer trainer(ds, c);
        const TrainResult r = trainer.run();
        a.ctr_rows = r.ctr_rows;
        a.report = evaluate_params(r.params, ds, c);
        a.ok = true;
      } catch (const std::exception& e) {
        a.error = e.what();
      }
      std::lock_guard lock(log_mu);
      std::cerr << "arm " << variant_name(a.variant) << " seed " << a.seed << ": "
                << (a.ok ? "ok" : "FAILED (" + a.error + ")") << " in " << static_cast<long>(sw.ms()) << " ms\n";
    }
  });

  const fs::path out(o.out);
  fs::create_directories(out);
  std::string table = "variant,seed,gauc_avg,gauc_show,gauc_click,auc,users_evaluated,users_excluded,ctr_rows,status\n";
  bool all_ok = true;
  for (const auto& a : arms) {
    all_ok = all_ok && a.ok;
    std::string row = metrics_row(std::string(variant_name(a.variant)), a.report);
    row.insert(row.find(','), "," + std::to_string(a.seed));
    table += row + "," + std::to_string(a.ctr_rows) + "," + (a.ok ? "ok" : "failed") + "\n";
  }
  std::string medians = std::string(kMetricsHeader) + "\n";
  for (Variant v : kAllVariants) {
    std::vector<double> ga, gs, gc, au, ue, ux;
    for (const auto& a : arms) {
      if (a.variant != v || !a.ok) continue;
      ga.push_back(a.report.gauc_avg);
      gs.push_back(a.report.gauc_show);
      gc.push_back(a.report.gauc_click);
      au.push_back(a.report.auc);
      ue.push_back(static_cast<double>(a.report.users_evaluated));
      ux.push_back(static_cast<double>(a.report.users_excluded));
    }
    if (ga.empty()) continue;
    MetricsReport m;
    m.gauc_avg = median(ga);
    m.gauc_show = median(gs);
    m.gauc_click = median(gc);
    m.auc = median(au);
    m.users_evaluated = static_cast<std::size_t>(median(ue));
    m.users_excluded = static_cast<std::size_t>(median(ux));
    medians += metrics_row(std::string(variant_name(v)), m) + "\n";
  }
  write_text(out / kAblationFile, table);
  write_text(out / kMetricsFile, medians);

  RunManifest m;
  m.command = "ablate";
  m.config = to_text(base);
  m.seed = seeds.front();
  m.run_id = make_run_id(m);
  m.inputs = {{"data", o.data}};
  add_dataset_digests(m, o.data);
  m.outputs = {{"ablation", (out / kAblationFile).string()}, {"medians", (out / kMetricsFile).string()}};
  m.counts = {{"arms", arms.size()}, {"seeds", seeds.size()}};
  write_manifest(m, out / kManifestFile);

  std::cout << table << "\nmedians over " << seeds.size() << " seed(s)\n" << medians;
  if (!all_ok) {
    std::cerr << "usdlab: some arms failed; results above are partial\n";
    return 2;
  }
  return 0;
}

int cmd_gradcheck(const Options& o) {
  const ExperimentConfig c = load_any_config(o.config);
  ModelCheckOptions mo;
  mo.clip = c.train.clip;
  if (o.inject_fault) mo.check.injected_fault = 0.1;
  const std::vector<std::uint64_t> seeds = o.seeds.empty() ? std::vector<std::uint64_t>{1, 2, 3} : o.seeds;
  std::ostringstream report;
  bool passed = true;
  for (std::uint64_t seed : seeds) {
    const GradCheckReport r = check_final_loss(seed, mo);
    passed = passed && r.passed;
    report << "seed " << seed << "\n" << format_report(r) << "\n";
  }
  report << (passed ? "PASS" : "FAIL") << "\n";
  std::cout << report.str();
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "gradcheck.txt", report.str());
  }
  return passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"usdlab: intent-driven sampling and dual-debiasing lab"};
  app.require_subcommand(1);
  Options o;

  auto add_threads = [&](CLI::App* cmd) {
    cmd->add_option("--threads", o.threads, "Worker threads for parallel stages (0 = all cores)");
  };

  auto* gen = app.add_subcommand("gen", "Generate a synthetic world and write its dataset");
  gen->add_option("--config", o.config, "Config file");
  gen->add_option("--out", o.out, "Output directory")->required();
  add_threads(gen);

  auto* train = app.add_subcommand("train", "Train one ablation arm");
  train->add_option("--config", o.config, "Config file or manifest.json");
  train->add_option("--data", o.data, "Dataset directory")->required();
  train->add_option("--variant", o.variant, "One of: " + variant_list());
  train->add_option("--seeds", o.seeds, "Training seed (overrides [train] seed)")->delimiter(',');
  train->add_option("--out", o.out, "Output directory")->required();
  add_threads(train);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out days");
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", o.data, "Dataset directory")->required();
  eval->add_option("--config", o.config, "Config file or manifest.json (default: manifest beside the checkpoint)");
  eval->add_option("--variant", o.variant, "Row label in metrics.csv");
  eval->add_option("--out", o.out, "Output directory")->required();
  add_threads(eval);

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate every variant for each seed");
  ablate->add_option("--config", o.config, "Config file or manifest.json");
  ablate->add_option("--data", o.data, "Dataset directory")->required();
  ablate->add_option("--seeds", o.seeds, "Comma-separated training seeds")->delimiter(',');
  ablate->add_option("--out", o.out, "Output directory")->required();
  ablate->add_option("--jobs", o.jobs, "Arms trained concurrently")->check(CLI::PositiveNumber);
  add_threads(ablate);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the joint objective");
  grad->add_option("--config", o.config, "Config file (clip range)");
  grad->add_option("--seeds", o.seeds, "Comma-separated seeds (default 1,2,3)")->delimiter(',');
  grad->add_option("--out", o.out, "Directory for gradcheck.txt");
  grad->add_flag("--inject-fault", o.inject_fault, "Corrupt every analytic gradient by +0.1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*ablate) return cmd_ablate(o);
    if (*grad) return cmd_gradcheck(o);
  } catch (const ConfigError& e) {
    std::cerr << "usdlab: config error: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usdlab: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "usdlab: error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
