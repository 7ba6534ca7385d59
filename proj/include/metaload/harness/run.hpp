#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metaload/data/task.hpp"
#include "metaload/harness/config.hpp"
#include "metaload/metrics/metrics.hpp"
#include "metaload/model/checkpoint.hpp"

namespace metaload::harness {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t value);

/// Hash of the canonical config JSON (output_dir excluded).
std::string config_hash(const ExperimentConfig& config);
/// Hash of every task id and sample value of the given tasks.
std::string tasks_hash(std::span<const data::Task> tasks);
std::string data_hash(const data::MetaDataset& dataset);

data::MetaDataset build_data(const ExperimentConfig& config);

struct ModelResults {
  std::string model;
  std::vector<metrics::TaskMetrics> tasks;
  metrics::AggregateReport aggregate;
};

struct RunArtifacts {
  std::filesystem::path dir;
  std::string config_hash;
  std::string data_hash;
  std::vector<ModelResults> models;
  std::optional<model::Checkpoint> meta_checkpoint;
  std::optional<model::Checkpoint> ti_checkpoint;

  /// Throws std::out_of_range when the model was not run.
  const ModelResults& at(const std::string& model) const;
};

/// Trained checkpoints keyed by everything that influences training, so
/// sweep cells and repeated runs that only change evaluation reuse them.
class TrainingCache {
 public:
  const model::Checkpoint* find(const std::string& key) const;
  void store(const std::string& key, model::Checkpoint ckpt) { entries_[key] = std::move(ckpt); }

 private:
  std::map<std::string, model::Checkpoint> entries_;
};

struct RunOptions {
  TrainingCache* cache = nullptr;
  std::function<void(const std::string&)> log;
  bool write_checkpoints = true;
};

/// data -> meta-train -> TI pretrain -> evaluation of every requested model
/// on every meta-test task -> aggregates. Writes metrics_per_task.csv,
/// aggregate.json, run_meta.json and checkpoint files into output_dir.
/// Stage failures surface as RunError naming the stage.
RunArtifacts run(ExperimentConfig config, const RunOptions& options = {});

/// Evaluates a meta-learned checkpoint on every test task.
std::vector<metrics::TaskMetrics> evaluate_checkpoint(const model::Checkpoint& ckpt, std::span<const data::Task> tasks,
                                                      std::size_t steps);

/// Copy of `base` with the sweep axis set to `value`.
ExperimentConfig sweep_cell_config(const ExperimentConfig& base, SweepAxis axis, std::size_t value);

struct SweepCell {
  std::size_t value = 0;
  std::string status;  // "ok" or the failure message
  std::optional<RunArtifacts> artifacts;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::support_months;
  std::vector<SweepCell> cells;
};

/// One run per sweep value in `<output_dir>/<axis>_<value>`, then
/// `<output_dir>/sweep_table.csv`. A failed cell is recorded, not fatal.
SweepResult sweep(const ExperimentConfig& config, const RunOptions& options = {});

/// Linear-interpolation quantile of sorted values, p in [0, 1].
double quantile(std::span<const double> sorted, double p);

/// Reads completed run or sweep directories and writes boxplot_data.csv,
/// sweep_lines.csv (when sweeps are present) and summary.md into out_dir.
/// Throws DataError on missing artifacts or mismatched data hashes.
void report(std::span<const std::filesystem::path> run_dirs, const std::filesystem::path& out_dir);

}  // namespace metaload::harness
