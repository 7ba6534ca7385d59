#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "metaload/data/task.hpp"
#include "metaload/data/time_series.hpp"

namespace metaload::data {

enum class Role { train, test };

std::string role_name(Role role);
Role parse_role(const std::string& text);

/// Synthetic consumer aggregates laid out on a monthly calendar grid.
///
/// Train tasks start on the first day of a random grid month and last
/// train_min_months..train_max_months. Test tasks: for each of the first
/// test_start_months grid months, test_per_length series of each length in
/// test_months. A nonzero test_series_months replaces the length grid with one
/// fixed length, and test_support_months then selects the trailing window
/// (0: whole series).
struct SynthConfig {
  std::size_t n_consumers = 50;
  std::size_t train_tasks = 40;
  std::size_t train_min_months = 2;
  std::size_t train_max_months = 4;
  std::size_t test_per_length = 5;
  std::vector<std::size_t> test_months{1, 2, 3};
  std::size_t test_start_months = 16;
  std::size_t test_series_months = 0;
  std::size_t test_support_months = 0;
  std::chrono::year_month first_month{std::chrono::year{2020}, std::chrono::October};
  std::size_t grid_months = 18;
  std::chrono::minutes resolution{15};
  bool winter_peaking = true;
  std::uint64_t seed = 1;

  /// Throws ConfigError with the offending field.
  void validate() const;
};

/// Everything needed to regenerate one series.
struct SeriesSpec {
  std::string id;
  Role role = Role::train;
  std::chrono::sys_days start{};
  std::size_t days = 0;
  std::size_t support_months = 0;
  std::uint64_t seed = 0;
  std::size_t n_consumers = 50;
  std::chrono::minutes resolution{15};
  bool winter_peaking = true;
};

std::vector<SeriesSpec> synth_plan(const SynthConfig& config);

/// Sum of n_consumers simulated households/businesses. Each consumer follows
/// one of four archetypes (residential, evening-heavy, daytime business,
/// electric heating) drawn from a per-series mixture, with a daily cycle,
/// weekday/weekend modulation, an annual seasonal factor and AR(1)
/// multiplicative noise. Generated at 15 minutes and summed to coarser
/// resolutions.
TimeSeries synth_series(const SeriesSpec& spec);

MetaDataset synth_meta_dataset(const SynthConfig& config, const WindowPolicy& policy = {});

}  // namespace metaload::data
