#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace metaload::data {

using TimePoint = std::chrono::sys_seconds;

/// Gap-free load readings (kWh per interval) at a fixed resolution.
struct TimeSeries {
  std::string id;
  TimePoint start{};
  std::chrono::minutes resolution{15};
  std::vector<double> values;

  std::size_t samples_per_day() const;
  TimePoint time_at(std::size_t i) const { return start + resolution * static_cast<long>(i); }
};

/// Throws DataError on negative/non-finite readings or a resolution that does not divide a day.
void validate(const TimeSeries& series);

/// Sums consecutive readings into a coarser interval (energy is additive).
/// The target must be a multiple of the source resolution and the series must
/// start on a target boundary; a trailing partial interval is dropped.
TimeSeries resample(const TimeSeries& series, std::chrono::minutes target);

std::string format_iso(TimePoint t);
/// Accepts YYYY-MM-DDTHH:MM[:SS][Z|+00:00]; throws DataError otherwise.
TimePoint parse_iso(const std::string& text);
std::string month_key(TimePoint t);  // "YYYY-MM"

/// Reads one series per file (header `timestamp,kwh`, 15-minute UTC spacing).
/// Rows may be unsorted. Throws DataError naming the file and line for
/// malformed rows, negative readings, duplicates, and the first missing
/// timestamp of any gap.
std::vector<TimeSeries> ingest_csv(std::span<const std::filesystem::path> paths);

void write_csv(const std::filesystem::path& path, const TimeSeries& series);

}  // namespace metaload::data
