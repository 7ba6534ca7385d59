// Command-line driver: synth, ingest, train, eval, baseline, run, sweep, report.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "metaload/data/manifest.hpp"
#include "metaload/error.hpp"
#include "metaload/harness/config.hpp"
#include "metaload/harness/run.hpp"
#include "metaload/meta/maml.hpp"

namespace fs = std::filesystem;
using namespace metaload;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> set;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Config file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Model seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output directory (overrides output_dir)");
  cmd->add_option("--set", c.set, "Extra key=value overrides")->type_name("KEY=VALUE");
}

harness::ExperimentConfig resolve(const Common& c) {
  harness::ExperimentConfig cfg = c.config.empty() ? harness::ExperimentConfig{} : harness::load_config(c.config);
  for (const auto& kv : c.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    harness::set_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

harness::RunOptions verbose() {
  harness::RunOptions o;
  o.log = [](const std::string& m) { std::clog << m << std::endl; };
  return o;
}

void write_eval(const fs::path& dir, const std::vector<metrics::TaskMetrics>& rows, const std::string& header) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "metrics_per_task.csv", std::ios::binary);
  const std::vector<std::string> pre{header};
  metrics::write_task_csv(csv, rows, pre);
  const auto agg = metrics::aggregate(rows, true);
  auto doc = metrics::to_json(agg);
  doc["formatted"] = metrics::format_summary(agg.overall);
  std::ofstream(dir / "aggregate.json") << doc.dump(2) << '\n';
  std::cout << metrics::format_summary(agg.overall) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-learned few-shot load forecasting"};
  app.require_subcommand(1);

  Common synth_opt, train_opt, eval_opt, base_opt, run_opt, sweep_opt;

  auto* synth = app.add_subcommand("synth", "Write synthetic series as CSV files plus a manifest");
  add_common(synth, synth_opt);

  auto* ingest = app.add_subcommand("ingest", "Validate CSV series and write a manifest");
  std::vector<std::string> ingest_files;
  std::string ingest_out = ".", ingest_role = "test";
  std::size_t ingest_support = 0;
  ingest->add_option("files", ingest_files, "CSV files (header timestamp,kwh)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "Directory for manifest.json");
  ingest->add_option("--role", ingest_role, "train or test")->check(CLI::IsMember({"train", "test"}));
  ingest->add_option("--support-months", ingest_support, "Trailing support window (0: whole series)");

  auto* train = app.add_subcommand("train", "Meta-train and write checkpoint.json");
  add_common(train, train_opt);

  auto* eval = app.add_subcommand("eval", "Adapt a checkpoint to every meta-test task and score it");
  add_common(eval, eval_opt);
  std::string eval_ckpt;
  eval->add_option("--checkpoint", eval_ckpt, "Meta-learned checkpoint")->required()->check(CLI::ExistingFile);

  auto* base = app.add_subcommand("baseline", "Run the TS-LSTM and/or TI-LSTM baselines");
  add_common(base, base_opt);
  std::string base_kind = "both";
  base->add_option("--kind", base_kind, "ts, ti or both")->check(CLI::IsMember({"ts", "ti", "both"}));

  auto* run = app.add_subcommand("run", "Full experiment: data, meta-train, baselines, evaluation");
  add_common(run, run_opt);

  auto* sweep = app.add_subcommand("sweep", "One run per value of sweep.axis");
  add_common(sweep, sweep_opt);

  auto* report = app.add_subcommand("report", "Summaries and plot data from finished runs");
  std::vector<std::string> report_dirs;
  std::string report_out = "report";
  report->add_option("runs", report_dirs, "Run or sweep directories")->required();
  report->add_option("--out", report_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      auto cfg = resolve(synth_opt);
      cfg.finalize();
      const fs::path dir = cfg.output_dir;
      fs::create_directories(dir / "series");
      data::Manifest manifest;
      for (const auto& spec : data::synth_plan(cfg.data.synth)) {
        data::SeriesSpec fine = spec;
        fine.resolution = std::chrono::minutes{15};
        const fs::path rel = fs::path("series") / (spec.id + ".csv");
        data::write_csv(dir / rel, data::synth_series(fine));
        manifest.tasks.push_back({spec.id, spec.role, spec.support_months, rel});
      }
      data::save_manifest(dir / "manifest.json", manifest);
      std::cout << "wrote " << manifest.tasks.size() << " series and " << (dir / "manifest.json").string() << '\n';
    } else if (*ingest) {
      std::vector<fs::path> paths(ingest_files.begin(), ingest_files.end());
      const auto series = data::ingest_csv(paths);
      data::Manifest manifest;
      for (std::size_t i = 0; i < series.size(); ++i) {
        manifest.tasks.push_back({series[i].id, data::parse_role(ingest_role), ingest_support, fs::absolute(paths[i])});
        std::cout << series[i].id << ": " << series[i].values.size() << " readings from "
                  << data::format_iso(series[i].start) << '\n';
      }
      fs::create_directories(ingest_out);
      data::save_manifest(fs::path(ingest_out) / "manifest.json", manifest);
    } else if (*train) {
      auto cfg = resolve(train_opt);
      cfg.finalize();
      const auto ds = harness::build_data(cfg);
      const auto ck = meta::meta_train(cfg.meta, cfg.arch, ds.train_tasks, [](const model::HistoryEntry& h) {
        std::clog << "epoch " << h.epoch << " meta-loss " << h.meta_loss << " beta " << h.beta << '\n';
      });
      fs::create_directories(cfg.output_dir);
      model::save_checkpoint(cfg.output_dir / "checkpoint.json", ck);
      std::cout << "wrote " << (cfg.output_dir / "checkpoint.json").string() << '\n';
    } else if (*eval) {
      auto cfg = resolve(eval_opt);
      cfg.finalize();
      const auto ds = harness::build_data(cfg);
      const auto ck = model::load_checkpoint(eval_ckpt);
      const auto rows = harness::evaluate_checkpoint(ck, ds.test_tasks, cfg.meta.inner_steps);
      write_eval(cfg.output_dir, rows,
                 "config_hash=" + harness::config_hash(cfg) + ", data_hash=" + harness::data_hash(ds) +
                     ", checkpoint=" + fs::path(eval_ckpt).filename().string());
    } else if (*base) {
      auto cfg = resolve(base_opt);
      cfg.models.clear();
      if (base_kind != "ts") cfg.models.push_back("ti_lstm");
      if (base_kind != "ti") cfg.models.push_back("ts_lstm");
      harness::run(cfg, verbose());
    } else if (*run) {
      const auto art = harness::run(resolve(run_opt), verbose());
      for (const auto& m : art.models) std::cout << m.model << ": " << metrics::format_summary(m.aggregate.overall) << '\n';
    } else if (*sweep) {
      const auto result = harness::sweep(resolve(sweep_opt), verbose());
      std::size_t failed = 0;
      for (const auto& c : result.cells) failed += c.status == "ok" ? 0 : 1;
      std::cout << result.cells.size() - failed << " of " << result.cells.size() << " sweep cells succeeded\n";
      return failed == 0 ? 0 : 1;
    } else if (*report) {
      std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
      harness::report(dirs, report_out);
      std::ifstream md(fs::path(report_out) / "summary.md");
      std::cout << md.rdbuf();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
