#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace metaload::metrics {

/// Floor for values entering log/ratio metrics.
inline constexpr double kEpsilon = 1e-8;

double mse(std::span<const double> forecast, std::span<const double> actual);

/// 100/n * sum |f - a| / a. Throws DomainError if an actual is below kEpsilon.
double mape(std::span<const double> forecast, std::span<const double> actual);

/// 100/n * sum |ln f - ln a|. Actuals below kEpsilon throw DomainError;
/// forecasts below it are raised to kEpsilon and counted in `clamped`.
double malpe(std::span<const double> forecast, std::span<const double> actual, std::size_t* clamped = nullptr);

struct TaskMetrics {
  std::string task_id;
  std::string model;
  std::string query_month;  // "YYYY-MM"
  double mse = 0.0;         // in scaled units
  double mape_pct = 0.0;
  double malpe_pct = 0.0;
  std::size_t n_points = 0;
  std::size_t clamped = 0;
};

TaskMetrics evaluate(std::string task_id, std::string model, std::string query_month, std::span<const double> forecast,
                     std::span<const double> actual);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

Summary summarize(std::span<const double> values);

struct MetricSummary {
  std::size_t count = 0;
  Summary mse, mape, malpe;
  std::size_t clamped = 0;
};

struct AggregateReport {
  MetricSummary overall;
  std::map<std::string, MetricSummary> by_month;
};

/// Throws DomainError on empty input.
AggregateReport aggregate(std::span<const TaskMetrics> results, bool group_by_month);

/// "0.035 ± 0.017, 15.00% ± 2.92%, 14.72% ± 2.52%"
std::string format_summary(const MetricSummary& s);

nlohmann::json to_json(const MetricSummary& s);
nlohmann::json to_json(const AggregateReport& r);

/// One row per task; `preamble` lines are written first as `# ` comments.
void write_task_csv(std::ostream& out, std::span<const TaskMetrics> rows, std::span<const std::string> preamble);
/// Skips comment lines. Throws DataError on malformed content.
std::vector<TaskMetrics> read_task_csv(std::istream& in);

}  // namespace metaload::metrics
