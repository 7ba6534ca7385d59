#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "metaload/baselines/baselines.hpp"
#include "metaload/data/synth.hpp"
#include "metaload/data/task.hpp"
#include "metaload/meta/maml.hpp"

namespace metaload::harness {

enum class DataSource { synth, manifest };

struct DataConfig {
  DataSource source = DataSource::synth;
  std::filesystem::path manifest;
  data::SynthConfig synth;
  data::WindowPolicy window;
  std::uint64_t seed = 1;  // synthetic data seed, shared by every model seed
};

enum class SweepAxis { second_order_epochs, linear_layers, inner_steps, hidden_size, support_months };

struct SweepConfig {
  SweepAxis axis = SweepAxis::support_months;
  std::vector<std::size_t> values;
};

struct ExperimentConfig {
  DataConfig data;
  model::ArchConfig arch;
  meta::MetaTrainConfig meta;
  baselines::BaselineConfig baseline;
  std::vector<std::string> models{"proposed", "ti_lstm", "ts_lstm"};
  std::optional<SweepConfig> sweep;
  std::filesystem::path output_dir = "runs/default";
  std::uint64_t seed = 1;

  /// Derives dependent fields (window lengths from the resolution, seeds,
  /// baseline arch) and throws ConfigError with the offending key.
  void finalize();
};

/// Flat `key = value` text. Blank lines and `#` comments are ignored.
/// Keys are listed in README.md; unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one `key = value` assignment (also used for command-line overrides).
void set_option(ExperimentConfig& config, const std::string& key, const std::string& value);

nlohmann::json to_json(const ExperimentConfig& config);
std::string axis_name(SweepAxis axis);

}  // namespace metaload::harness
