#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "metaload/data/time_series.hpp"
#include "metaload/model/lstm.hpp"

namespace metaload::data {

struct ForecastSample {
  std::vector<double> x;  // input_days of readings
  std::vector<double> y;  // the following day
  TimePoint input_start{};
  TimePoint output_start{};
};

/// One series split into a support set (non-overlapping inputs) and a
/// fixed-size query set (inputs shifted by one day).
struct Task {
  std::string id;
  std::vector<ForecastSample> support;
  std::vector<ForecastSample> query;
  double scale = 1.0;  // every stored value is raw / scale
  std::pair<TimePoint, TimePoint> source_range{};

  /// Month ("YYYY-MM") of the middle query output day.
  std::string query_month() const;
  model::Batch support_batch() const;
  model::Batch query_batch() const;
};

struct WindowPolicy {
  std::size_t input_days = 7;
  std::size_t query_samples = 7;
  std::size_t support_stride_days = 7;  // 8 makes support samples fully disjoint
  std::size_t days_per_month = 30;

  std::size_t query_span_days() const { return query_samples + input_days; }
  std::size_t sample_days() const { return input_days + 1; }
};

/// Whole days available after dropping readings before the first midnight.
std::size_t whole_days(const TimeSeries& series);

/// Builds and scales a task. The task window is the trailing
/// support_months * days_per_month whole days (the whole series when
/// support_months is 0). Its last query_span_days() days are the query
/// region; everything before is tiled into support samples from the region
/// start with the configured stride.
///
/// Throws DataError stating required vs available days when too short.
Task build_task(const TimeSeries& series, std::size_t support_months, const WindowPolicy& policy = {});

/// Same windowing without scaling (scale stays 1).
Task build_task_unscaled(const TimeSeries& series, std::size_t support_months, const WindowPolicy& policy = {});

/// Divides every sample value by the largest support reading and records it.
/// Throws DataError when the support set is all zero.
Task scale_task(const Task& task);
/// Restores raw units.
Task unscale_task(const Task& task);

struct MetaDataset {
  std::vector<Task> train_tasks;
  std::vector<Task> test_tasks;

  /// Throws DataError on duplicate ids or malformed tasks.
  void validate() const;
};

}  // namespace metaload::data
