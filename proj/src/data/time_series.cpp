#include "metaload/data/time_series.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "metaload/error.hpp"

namespace metaload::data {

using namespace std::chrono;

std::size_t TimeSeries::samples_per_day() const {
  return static_cast<std::size_t>(minutes{days{1}} / resolution);
}

void validate(const TimeSeries& series) {
  if (series.resolution <= minutes{0} || minutes{days{1}} % series.resolution != minutes{0}) {
    throw DataError("series " + series.id + ": resolution of " + std::to_string(series.resolution.count()) +
                    " minutes does not divide a day");
  }
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    const double v = series.values[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw DataError("series " + series.id + ": invalid reading " + std::to_string(v) + " at " +
                      format_iso(series.time_at(i)));
    }
  }
}

TimeSeries resample(const TimeSeries& series, minutes target) {
  if (target <= minutes{0} || target % series.resolution != minutes{0}) {
    throw DataError("resample: target of " + std::to_string(target.count()) + " minutes is not a multiple of " +
                    std::to_string(series.resolution.count()));
  }
  if (series.start.time_since_epoch() % target != seconds{0}) {
    throw DataError("resample: series " + series.id + " does not start on a " + std::to_string(target.count()) +
                    "-minute boundary");
  }
  const auto factor = static_cast<std::size_t>(target / series.resolution);
  TimeSeries out{series.id, series.start, target, {}};
  out.values.reserve(series.values.size() / factor);
  for (std::size_t i = 0; i + factor <= series.values.size(); i += factor) {
    double acc = 0.0;
    for (std::size_t j = 0; j < factor; ++j) acc += series.values[i + j];
    out.values.push_back(acc);
  }
  return out;
}

std::string format_iso(TimePoint t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

TimePoint parse_iso(const std::string& text) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  int consumed = 0;
  const char* c = text.c_str();
  if (std::sscanf(c, "%4d-%2u-%2uT%2u:%2u%n", &y, &mo, &d, &h, &mi, &consumed) != 5) {
    throw DataError("malformed timestamp '" + text + "'");
  }
  std::string rest = text.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest[0] == ':') {
    int more = 0;
    if (std::sscanf(rest.c_str(), ":%2u%n", &s, &more) != 1) throw DataError("malformed timestamp '" + text + "'");
    rest = rest.substr(static_cast<std::size_t>(more));
  }
  if (!(rest.empty() || rest == "Z" || rest == "+00:00")) {
    throw DataError("timestamp '" + text + "' is not UTC");
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw DataError("invalid timestamp '" + text + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string month_key(TimePoint t) {
  const year_month_day ymd{floor<days>(t)};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()));
  return buf;
}

namespace {

std::string trim(std::string s) {
  const auto ws = [](unsigned char ch) { return std::isspace(ch) != 0; };
  while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && ws(static_cast<unsigned char>(s[b]))) ++b;
  return s.substr(b);
}

TimeSeries read_one(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line) || trim(line) != "timestamp,kwh") {
    throw DataError(where + ":1: expected header 'timestamp,kwh'");
  }
  std::vector<std::pair<TimePoint, double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const std::string at = where + ":" + std::to_string(lineno);
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw DataError(at + ": malformed row '" + line + "'");
    }
    TimePoint t;
    try {
      t = parse_iso(trim(line.substr(0, comma)));
    } catch (const DataError& e) {
      throw DataError(at + ": " + e.what());
    }
    const std::string num = trim(line.substr(comma + 1));
    double v = 0.0;
    std::size_t used = 0;
    try {
      v = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != num.size() || !std::isfinite(v)) throw DataError(at + ": malformed reading '" + num + "'");
    if (v < 0.0) throw DataError(at + ": negative reading " + num);
    rows.emplace_back(t, v);
  }
  if (rows.empty()) throw DataError(where + ": no readings");
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  TimeSeries series{path.stem().string(), rows.front().first, minutes{15}, {}};
  series.values.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      const auto step = rows[i].first - rows[i - 1].first;
      if (step == seconds{0}) throw DataError(where + ": duplicate timestamp " + format_iso(rows[i].first));
      if (step != series.resolution) {
        throw DataError(where + ": gap, first missing timestamp " + format_iso(rows[i - 1].first + series.resolution));
      }
    }
    series.values.push_back(rows[i].second);
  }
  return series;
}

}  // namespace

std::vector<TimeSeries> ingest_csv(std::span<const std::filesystem::path> paths) {
  std::vector<TimeSeries> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(read_one(p));
  return out;
}

void write_csv(const std::filesystem::path& path, const TimeSeries& series) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "timestamp,kwh\n";
  char buf[64];
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", series.values[i]);
    out << format_iso(series.time_at(i)) << ',' << buf << '\n';
  }
}

}  // namespace metaload::data
