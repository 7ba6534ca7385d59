#include "metaload/harness/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "metaload/baselines/baselines.hpp"
#include "metaload/data/manifest.hpp"
#include "metaload/error.hpp"
#include "metaload/kernels/dense.hpp"
#include "metaload/meta/maml.hpp"
#include "metaload/parallel.hpp"

#ifndef METALOAD_VERSION
#define METALOAD_VERSION "dev"
#endif

namespace metaload::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string config_hash(const ExperimentConfig& config) { return hex64(fnv1a(to_json(config).dump())); }

std::string tasks_hash(std::span<const data::Task> tasks) {
  std::uint64_t h = fnv1a("tasks");
  auto mix_values = [&h](const std::vector<double>& v) {
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)), h);
  };
  for (const auto& t : tasks) {
    h = fnv1a(t.id, h);
    for (const auto* set : {&t.support, &t.query}) {
      h = fnv1a(std::to_string(set->size()), h);
      for (const auto& s : *set) {
        mix_values(s.x);
        mix_values(s.y);
      }
    }
    const double scale = t.scale;
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(&scale), sizeof scale), h);
  }
  return hex64(h);
}

std::string data_hash(const data::MetaDataset& dataset) {
  return hex64(fnv1a(tasks_hash(dataset.train_tasks) + tasks_hash(dataset.test_tasks)));
}

data::MetaDataset build_data(const ExperimentConfig& config) {
  if (config.data.source == DataSource::synth) return data::synth_meta_dataset(config.data.synth, config.data.window);
  const auto manifest = data::load_manifest(config.data.manifest);
  return data::build_dataset(manifest, config.data.manifest.parent_path(), config.data.synth.resolution,
                             config.data.window);
}

const ModelResults& RunArtifacts::at(const std::string& model) const {
  for (const auto& m : models) {
    if (m.model == model) return m;
  }
  throw std::out_of_range("model " + model + " was not part of this run");
}

const model::Checkpoint* TrainingCache::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

namespace {

template <class F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw RunError("stage '" + name + "': " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<metrics::TaskMetrics> evaluate_tasks(std::span<const data::Task> tasks, Execution exec,
                                                 const std::function<metrics::TaskMetrics(const data::Task&)>& fn) {
  std::vector<metrics::TaskMetrics> out(tasks.size());
  for_each_index(tasks.size(), exec, [&](std::size_t i) { out[i] = fn(tasks[i]); });
  return out;
}

}  // namespace

std::vector<metrics::TaskMetrics> evaluate_checkpoint(const model::Checkpoint& ckpt, std::span<const data::Task> tasks,
                                                      std::size_t steps) {
  return evaluate_tasks(tasks, Execution::parallel,
                        [&](const data::Task& t) { return meta::adapt_and_eval(ckpt, t, steps); });
}

RunArtifacts run(ExperimentConfig config, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  config.finalize();
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };
  const auto want = [&](const char* m) { return std::find(config.models.begin(), config.models.end(), m) != config.models.end(); };

  stage("output", [&] { fs::create_directories(config.output_dir); });
  log("building data");
  const data::MetaDataset ds = stage("data", [&] { return build_data(config); });
  if (ds.test_tasks.empty()) throw RunError("stage 'data': no meta-test tasks");

  RunArtifacts art;
  art.dir = config.output_dir;
  art.config_hash = config_hash(config);
  art.data_hash = data_hash(ds);
  const std::string train_hash = tasks_hash(ds.train_tasks);
  const json arch_json = to_json(config)["arch"];

  if (want("proposed")) {
    const std::string key = "meta|" + train_hash + arch_json.dump() + meta::to_json(config.meta).dump();
    if (const auto* hit = options.cache ? options.cache->find(key) : nullptr) {
      log("meta-train: reusing cached checkpoint");
      art.meta_checkpoint = *hit;
    } else {
      log("meta-train: " + std::to_string(ds.train_tasks.size()) + " tasks, " + std::to_string(config.meta.epochs) +
          " epochs");
      art.meta_checkpoint = stage("meta-train", [&] {
        return meta::meta_train(config.meta, config.arch, ds.train_tasks, [&](const model::HistoryEntry& h) {
          if (h.epoch == 1 || h.epoch % 10 == 0 || h.epoch == config.meta.epochs) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "  epoch %zu  meta-loss %.6f  beta %.3g%s", h.epoch, h.meta_loss, h.beta,
                          h.second_order ? "  (second order)" : "");
            log(buf);
          }
        });
      });
      if (options.cache) options.cache->store(key, *art.meta_checkpoint);
    }
  }
  if (want("ti_lstm")) {
    const std::string key = "ti|" + train_hash + arch_json.dump() + baselines::to_json(config.baseline).dump();
    if (const auto* hit = options.cache ? options.cache->find(key) : nullptr) {
      log("ti pretrain: reusing cached checkpoint");
      art.ti_checkpoint = *hit;
    } else {
      log("ti pretrain: " + std::to_string(config.baseline.pretrain_epochs) + " epochs");
      art.ti_checkpoint = stage("ti-pretrain", [&] { return baselines::pretrain_ti(ds.train_tasks, config.baseline); });
      if (options.cache) options.cache->store(key, *art.ti_checkpoint);
    }
  }

  const Execution exec = config.meta.execution;
  for (const auto& name : config.models) {
    log("evaluating " + name + " on " + std::to_string(ds.test_tasks.size()) + " tasks");
    ModelResults r;
    r.model = name;
    r.tasks = stage("evaluate " + name, [&] {
      if (name == "proposed") {
        return evaluate_tasks(ds.test_tasks, exec, [&](const data::Task& t) {
          return meta::adapt_and_eval(*art.meta_checkpoint, t, config.meta.inner_steps, "proposed");
        });
      }
      if (name == "ti_lstm") {
        return evaluate_tasks(ds.test_tasks, exec, [&](const data::Task& t) {
          return baselines::finetune_eval_ti(*art.ti_checkpoint, t, config.baseline);
        });
      }
      return evaluate_tasks(ds.test_tasks, exec, [&](const data::Task& t) { return baselines::train_ts(t, config.baseline); });
    });
    r.aggregate = metrics::aggregate(r.tasks, true);
    log("  " + name + ": " + metrics::format_summary(r.aggregate.overall));
    art.models.push_back(std::move(r));
  }

  stage("write", [&] {
    const fs::path dir = config.output_dir;
    std::ostringstream csv;
    std::vector<metrics::TaskMetrics> rows;
    for (const auto& m : art.models) rows.insert(rows.end(), m.tasks.begin(), m.tasks.end());
    const std::vector<std::string> preamble{"config_hash=" + art.config_hash + ", data_hash=" + art.data_hash +
                                            ", seed=" + std::to_string(config.seed)};
    metrics::write_task_csv(csv, rows, preamble);
    write_text(dir / "metrics_per_task.csv", csv.str());

    json agg{{"config_hash", art.config_hash}, {"data_hash", art.data_hash}, {"seed", config.seed}, {"models", json::object()}};
    for (const auto& m : art.models) {
      json entry = metrics::to_json(m.aggregate);
      entry["formatted"] = metrics::format_summary(m.aggregate.overall);
      agg["models"][m.model] = std::move(entry);
    }
    write_text(dir / "aggregate.json", agg.dump(2) + "\n");

    if (options.write_checkpoints) {
      if (art.meta_checkpoint) model::save_checkpoint(dir / "checkpoint.json", *art.meta_checkpoint);
      if (art.ti_checkpoint) model::save_checkpoint(dir / "ti_checkpoint.json", *art.ti_checkpoint);
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json meta{{"config_hash", art.config_hash},
              {"data_hash", art.data_hash},
              {"seed", config.seed},
              {"version", METALOAD_VERSION},
              {"threads", kernels::max_threads()},
              {"wall_time_seconds", wall},
              {"train_tasks", ds.train_tasks.size()},
              {"test_tasks", ds.test_tasks.size()},
              {"config", to_json(config)}};
    write_text(dir / "run_meta.json", meta.dump(2) + "\n");
  });
  return art;
}

ExperimentConfig sweep_cell_config(const ExperimentConfig& base, SweepAxis axis, std::size_t value) {
  ExperimentConfig c = base;
  switch (axis) {
    case SweepAxis::second_order_epochs:
      if (value > c.meta.epochs) {
        throw ConfigError("sweep.values: " + std::to_string(value) + " second-order epochs exceed meta.epochs");
      }
      c.meta.first_order_epochs = c.meta.epochs - value;
      break;
    case SweepAxis::linear_layers: c.arch.num_linear_layers = value; break;
    case SweepAxis::inner_steps: c.meta.inner_steps = value; break;
    case SweepAxis::hidden_size: c.arch.hidden_size = value; break;
    case SweepAxis::support_months: {
      auto& s = c.data.synth;
      if (s.test_series_months == 0) {
        s.test_series_months = value;
        if (base.sweep) s.test_series_months = *std::max_element(base.sweep->values.begin(), base.sweep->values.end());
      }
      s.test_support_months = value;
      break;
    }
  }
  return c;
}

SweepResult sweep(const ExperimentConfig& config, const RunOptions& options) {
  if (!config.sweep) throw ConfigError("sweep.axis: no sweep configured");
  if (config.sweep->values.size() < 2) throw ConfigError("sweep.values: at least two values are required");
  TrainingCache local;
  RunOptions opts = options;
  if (!opts.cache) opts.cache = &local;

  SweepResult result;
  result.axis = config.sweep->axis;
  const std::string axis = axis_name(result.axis);
  for (std::size_t v : config.sweep->values) {
    SweepCell cell;
    cell.value = v;
    try {
      ExperimentConfig c = sweep_cell_config(config, result.axis, v);
      c.sweep.reset();
      c.output_dir = config.output_dir / (axis + "_" + std::to_string(v));
      if (opts.log) opts.log("sweep cell " + axis + " = " + std::to_string(v));
      cell.artifacts = run(c, opts);
      cell.status = "ok";
    } catch (const std::exception& e) {
      cell.status = e.what();
      if (opts.log) opts.log("  cell failed: " + cell.status);
    }
    result.cells.push_back(std::move(cell));
  }

  std::ostringstream t;
  t << "axis,value,model,status,n_tasks,mse_mean,mse_std,mape_mean,mape_std,malpe_mean,malpe_std\n";
  for (const auto& cell : result.cells) {
    if (!cell.artifacts) {
      std::string msg = cell.status;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      t << axis << ',' << cell.value << ",*,failed: " << msg << ",0,,,,,,\n";
      continue;
    }
    for (const auto& m : cell.artifacts->models) {
      const auto& o = m.aggregate.overall;
      t << axis << ',' << cell.value << ',' << m.model << ",ok," << o.count << ',' << format_g(o.mse.mean) << ','
        << format_g(o.mse.std) << ',' << format_g(o.mape.mean) << ',' << format_g(o.mape.std) << ','
        << format_g(o.malpe.mean) << ',' << format_g(o.malpe.std) << '\n';
    }
  }
  fs::create_directories(config.output_dir);
  write_text(config.output_dir / "sweep_table.csv", t.str());
  return result;
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile: no values");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p outside [0, 1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("missing artifact " + p.string());
  try {
    json doc;
    in >> doc;
    return doc;
  } catch (const json::exception& e) {
    throw DataError("corrupt artifact " + p.string() + ": " + e.what());
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void report(std::span<const fs::path> run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw DataError("report: no run directories given");
  struct Run {
    std::string label;
    std::vector<metrics::TaskMetrics> rows;
  };
  std::vector<Run> runs;
  std::vector<std::vector<std::string>> sweep_rows;
  std::string hash;
  std::string hash_dir;

  for (const auto& dir : run_dirs) {
    if (!fs::is_directory(dir)) throw DataError("missing artifact directory " + dir.string());
    const fs::path table = dir / "sweep_table.csv";
    if (fs::exists(table)) {
      std::ifstream in(table);
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        if (!line.empty()) sweep_rows.push_back(split_csv(line));
      }
      continue;
    }
    const json meta = read_json(dir / "run_meta.json");
    const std::string h = meta.value("data_hash", "");
    if (hash.empty()) {
      hash = h;
      hash_dir = dir.string();
    } else if (h != hash) {
      throw DataError("report: " + dir.string() + " has data hash " + h + " but " + hash_dir + " has " + hash +
                      "; refusing to merge runs over different data");
    }
    std::ifstream in(dir / "metrics_per_task.csv");
    if (!in) throw DataError("missing artifact " + (dir / "metrics_per_task.csv").string());
    std::string label = dir.filename().string();
    if (label.empty()) label = dir.parent_path().filename().string();
    runs.push_back({label, metrics::read_task_csv(in)});
  }

  fs::create_directories(out_dir);
  std::ostringstream box, md;
  box << "run,model,metric,min,q1,median,q3,max,n\n";
  md << "| run | model | tasks | MSE | MAPE | MALPE |\n|---|---|---|---|---|---|\n";
  for (const auto& r : runs) {
    std::vector<std::string> models;
    for (const auto& row : r.rows) {
      if (std::find(models.begin(), models.end(), row.model) == models.end()) models.push_back(row.model);
    }
    for (const auto& m : models) {
      std::vector<metrics::TaskMetrics> sel;
      for (const auto& row : r.rows) {
        if (row.model == m) sel.push_back(row);
      }
      const std::pair<const char*, double metrics::TaskMetrics::*> fields[] = {
          {"mse", &metrics::TaskMetrics::mse},
          {"mape_pct", &metrics::TaskMetrics::mape_pct},
          {"malpe_pct", &metrics::TaskMetrics::malpe_pct}};
      for (const auto& [name, member] : fields) {
        std::vector<double> v;
        for (const auto& row : sel) v.push_back(row.*member);
        std::sort(v.begin(), v.end());
        box << r.label << ',' << m << ',' << name << ',' << format_g(v.front()) << ',' << format_g(quantile(v, 0.25))
            << ',' << format_g(quantile(v, 0.5)) << ',' << format_g(quantile(v, 0.75)) << ',' << format_g(v.back())
            << ',' << v.size() << '\n';
      }
      const auto agg = metrics::aggregate(sel, false);
      const std::string s = metrics::format_summary(agg.overall);
      const auto c1 = s.find(", "), c2 = s.find(", ", c1 + 2);
      md << "| " << r.label << " | " << m << " | " << sel.size() << " | " << s.substr(0, c1) << " | "
         << s.substr(c1 + 2, c2 - c1 - 2) << " | " << s.substr(c2 + 2) << " |\n";
    }
  }
  write_text(out_dir / "boxplot_data.csv", box.str());

  if (!sweep_rows.empty()) {
    std::ostringstream lines;
    lines << "axis,value,model,metric,mean,std\n";
    md << "\n| axis | value | model | MSE | MAPE % | MALPE % |\n|---|---|---|---|---|---|\n";
    for (const auto& f : sweep_rows) {
      if (f.size() < 11 || f[3] != "ok") {
        if (f.size() >= 4) md << "| " << f[0] << " | " << f[1] << " | " << f[2] << " | " << f[3] << " | | |\n";
        continue;
      }
      lines << f[0] << ',' << f[1] << ',' << f[2] << ",mse," << f[5] << ',' << f[6] << '\n';
      lines << f[0] << ',' << f[1] << ',' << f[2] << ",mape_pct," << f[7] << ',' << f[8] << '\n';
      lines << f[0] << ',' << f[1] << ',' << f[2] << ",malpe_pct," << f[9] << ',' << f[10] << '\n';
      char buf[160];
      std::snprintf(buf, sizeof buf, "| %s | %s | %s | %.4f | %.2f | %.2f |\n", f[0].c_str(), f[1].c_str(), f[2].c_str(),
                    std::stod(f[5]), std::stod(f[7]), std::stod(f[9]));
      md << buf;
    }
    write_text(out_dir / "sweep_lines.csv", lines.str());
  }
  write_text(out_dir / "summary.md", md.str());
}

}  // namespace metaload::harness
