#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "metaload/data/manifest.hpp"
#include "metaload/data/synth.hpp"
#include "metaload/data/task.hpp"
#include "metaload/error.hpp"

using namespace metaload;
using namespace metaload::data;
using namespace std::chrono;

namespace {

TimeSeries ramp_series(std::size_t n_days, minutes res = minutes{15}) {
  TimeSeries s;
  s.id = "ramp";
  s.start = TimePoint{sys_days{year{2021} / March / 1}};
  s.resolution = res;
  s.values.resize(n_days * s.samples_per_day());
  std::iota(s.values.begin(), s.values.end(), 1.0);
  return s;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("metaload_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string day_csv(std::size_t skip_row = 999, bool reverse = false) {
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < 96; ++i) {
    if (i == skip_row) continue;
    const auto t = TimePoint{sys_days{year{2021} / June / 1}} + minutes{15} * static_cast<long>(i);
    rows.push_back(format_iso(t) + "," + std::to_string(0.5 + 0.01 * static_cast<double>(i)));
  }
  if (reverse) std::reverse(rows.begin(), rows.end());
  std::string out = "timestamp,kwh\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

}  // namespace

TEST_CASE("build_task examples") {
  const Task t30 = build_task_unscaled(ramp_series(30), 0);
  CHECK(t30.support.size() == 2);
  CHECK(t30.query.size() == 7);
  CHECK(t30.support[0].x.size() == 672);
  CHECK(t30.support[0].y.size() == 96);
  CHECK(build_task_unscaled(ramp_series(90), 0).support.size() == 10);

  // consecutive query inputs share six days
  const std::size_t day = 96;
  for (std::size_t q = 0; q + 1 < t30.query.size(); ++q) {
    CHECK(std::equal(t30.query[q].x.begin() + day, t30.query[q].x.end(), t30.query[q + 1].x.begin()));
    CHECK(t30.query[q + 1].input_start - t30.query[q].input_start == days{1});
  }
  // y follows x in the source
  CHECK(t30.support[1].y.front() == t30.support[1].x.back() + 1.0);
  // support inputs do not overlap
  CHECK(t30.support[1].input_start - t30.support[0].input_start == days{7});
}

TEST_CASE("query covers every weekday and follows the support region") {
  const Task t = build_task(ramp_series(60), 0);
  std::vector<unsigned> wds;
  for (const auto& q : t.query) wds.push_back(weekday{floor<days>(q.output_start)}.c_encoding());
  std::sort(wds.begin(), wds.end());
  CHECK(wds == std::vector<unsigned>{0, 1, 2, 3, 4, 5, 6});
  CHECK(t.support.back().output_start + days{1} <= t.query.front().input_start);
}

TEST_CASE("support_months selects the trailing window") {
  const TimeSeries s = ramp_series(200);
  const Task a = build_task_unscaled(s, 1);
  const Task b = build_task_unscaled(s, 6);
  CHECK(a.query.back().output_start == b.query.back().output_start);
  CHECK(a.source_range.second == s.time_at(s.values.size()));
  CHECK(a.source_range.second - a.source_range.first == days{30});
  CHECK(a.support.size() == 2);
  CHECK(b.support.size() == 23);
  CHECK_THROWS_WITH_AS(build_task(s, 7), doctest::Contains("required 210 days, available 200"), DataError);
  CHECK_THROWS_WITH_AS(build_task(ramp_series(21), 0), doctest::Contains("required 22 days, available 21"), DataError);
}

TEST_CASE("series not starting at midnight are trimmed to whole days") {
  TimeSeries s = ramp_series(31);
  s.start += hours{6};
  CHECK(whole_days(s) == 30);
  const Task t = build_task_unscaled(s, 0);
  CHECK(floor<days>(t.query.front().input_start) == t.query.front().input_start);
}

TEST_CASE("stride 8 gives disjoint support samples") {
  WindowPolicy p;
  p.support_stride_days = 8;
  const Task t = build_task_unscaled(ramp_series(90), 0, p);
  CHECK(t.support.size() == 9);
  for (std::size_t i = 0; i + 1 < t.support.size(); ++i) {
    CHECK(t.support[i].output_start + days{1} == t.support[i + 1].input_start);
  }
}

TEST_CASE("hourly windows") {
  const Task t = build_task_unscaled(ramp_series(30, minutes{60}), 0);
  CHECK(t.support[0].x.size() == 168);
  CHECK(t.support[0].y.size() == 24);
}

TEST_CASE("scale_task divides by the support maximum and round trips") {
  Task t;
  t.id = "t";
  t.support.push_back({{1.0, 4.0}, {2.0}, {}, {}});
  t.query.push_back({{2.0, 8.0}, {3.0}, {}, {}});
  const Task s = scale_task(t);
  CHECK(s.scale == 4.0);
  CHECK(s.support[0].y[0] == 0.5);
  CHECK(s.query[0].x[1] == 2.0);

  const Task big = build_task_unscaled(ramp_series(40), 0);
  const Task back = unscale_task(scale_task(big));
  for (std::size_t i = 0; i < big.query.size(); ++i) {
    for (std::size_t j = 0; j < big.query[i].x.size(); ++j) {
      CHECK(std::abs(back.query[i].x[j] - big.query[i].x[j]) <= 1e-12 * big.query[i].x[j]);
    }
  }

  Task zero = t;
  zero.support[0] = {{0.0, 0.0}, {0.0}, {}, {}};
  CHECK_THROWS_AS(scale_task(zero), DataError);
}

TEST_CASE("resample sums readings") {
  TimeSeries s = ramp_series(2);
  const TimeSeries h = resample(s, minutes{60});
  REQUIRE(h.values.size() == 48);
  CHECK(h.values[0] == 1.0 + 2.0 + 3.0 + 4.0);
  CHECK(h.resolution == minutes{60});
  CHECK_THROWS_AS(resample(s, minutes{50}), DataError);
}

TEST_CASE("iso timestamps") {
  const TimePoint t = parse_iso("2021-02-03T04:05:06Z");
  CHECK(format_iso(t) == "2021-02-03T04:05:06Z");
  CHECK(parse_iso("2021-02-03T04:05") == t - seconds{6});
  CHECK(parse_iso("2021-02-03T04:05:06+00:00") == t);
  CHECK(month_key(t) == "2021-02");
  CHECK_THROWS_AS(parse_iso("2021-02-30T00:00:00Z"), DataError);
  CHECK_THROWS_AS(parse_iso("2021-02-03T04:05:06+01:00"), DataError);
  CHECK_THROWS_AS(parse_iso("yesterday"), DataError);
}

TEST_CASE("ingest_csv") {
  const auto dir = temp_dir("csv");
  write_file(dir / "ok.csv", day_csv());
  write_file(dir / "rev.csv", day_csv(999, true));
  write_file(dir / "gap.csv", day_csv(10));
  write_file(dir / "neg.csv", "timestamp,kwh\n2021-06-01T00:00:00Z,1\n2021-06-01T00:15:00Z,-0.5\n");
  write_file(dir / "bad.csv", "timestamp,kwh\n2021-06-01T00:00:00Z,1\n2021-06-01T00:15:00Z;2\n");
  write_file(dir / "num.csv", "timestamp,kwh\n2021-06-01T00:00:00Z,abc\n");

  const std::vector<std::filesystem::path> ok{dir / "ok.csv", dir / "rev.csv"};
  const auto series = ingest_csv(ok);
  CHECK(series[0].values.size() == 96);
  CHECK(series[0].values == series[1].values);
  CHECK(series[0].start == series[1].start);
  CHECK(series[0].id == "ok");

  auto one = [&](const char* name) {
    const std::vector<std::filesystem::path> p{dir / name};
    return ingest_csv(p);
  };
  CHECK_THROWS_WITH_AS(one("gap.csv"), doctest::Contains("2021-06-01T02:30:00Z"), DataError);
  CHECK_THROWS_WITH_AS(one("neg.csv"), doctest::Contains("neg.csv:3"), DataError);
  CHECK_THROWS_WITH_AS(one("bad.csv"), doctest::Contains("bad.csv:3"), DataError);
  CHECK_THROWS_WITH_AS(one("num.csv"), doctest::Contains("num.csv:2"), DataError);

  write_csv(dir / "out.csv", series[0]);
  const std::vector<std::filesystem::path> again{dir / "out.csv"};
  CHECK(ingest_csv(again)[0].values == series[0].values);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic generator") {
  SeriesSpec feb;
  feb.start = sys_days{year{2021} / February / 1};
  feb.days = 28;
  feb.seed = 5;
  SeriesSpec aug = feb;
  aug.start = sys_days{year{2021} / August / 1};
  const TimeSeries a = synth_series(feb), b = synth_series(aug);
  CHECK(a.values == synth_series(feb).values);
  CHECK(std::all_of(a.values.begin(), a.values.end(), [](double v) { return v >= 0.0; }));
  const auto mean = [](const TimeSeries& s) {
    return std::accumulate(s.values.begin(), s.values.end(), 0.0) / static_cast<double>(s.values.size());
  };
  CHECK(mean(a) > mean(b));
  aug.winter_peaking = feb.winter_peaking = false;
  CHECK(mean(synth_series(feb)) < mean(synth_series(aug)));

  feb.winter_peaking = true;
  feb.resolution = minutes{60};
  const TimeSeries hourly = synth_series(feb);
  CHECK(hourly.values.size() == 28 * 24);
  CHECK(std::abs(hourly.values[0] - (a.values[0] + a.values[1] + a.values[2] + a.values[3])) < 1e-12);
}

TEST_CASE("synth_meta_dataset grid and determinism") {
  SynthConfig cfg;
  cfg.n_consumers = 3;
  cfg.train_tasks = 6;
  cfg.test_per_length = 1;
  cfg.test_start_months = 2;
  const MetaDataset ds = synth_meta_dataset(cfg);
  CHECK(ds.train_tasks.size() == 6);
  CHECK(ds.test_tasks.size() == 6);
  for (const auto& t : ds.train_tasks) {
    CHECK(t.support.size() >= 6);
    CHECK(t.query.size() == 7);
  }
  CHECK(ds.test_tasks[0].support.size() == 2);  // one month
  const MetaDataset again = synth_meta_dataset(cfg);
  CHECK(again.test_tasks[3].query[2].y == ds.test_tasks[3].query[2].y);
  cfg.seed = 2;
  CHECK(synth_meta_dataset(cfg).test_tasks[3].query[2].y != ds.test_tasks[3].query[2].y);

  cfg.test_series_months = 6;
  cfg.test_support_months = 2;
  const auto plan = synth_plan(cfg);
  CHECK(plan.back().days == 180);
  CHECK(plan.back().support_months == 2);

  cfg.train_min_months = 5;
  CHECK_THROWS_WITH_AS(synth_plan(cfg), doctest::Contains("data.train_min_months"), ConfigError);
}

TEST_CASE("manifest round trip with CSV and synthetic entries") {
  const auto dir = temp_dir("manifest");
  SeriesSpec spec;
  spec.id = "s";
  spec.start = sys_days{year{2021} / January / 1};
  spec.days = 40;
  spec.seed = 3;
  spec.n_consumers = 4;
  write_csv(dir / "c.csv", synth_series(spec));

  Manifest m;
  m.tasks.push_back({"csv_task", Role::test, 0, std::filesystem::path("c.csv")});
  SeriesSpec syn = spec;
  syn.id = "syn_task";
  m.tasks.push_back({"syn_task", Role::train, 0, syn});
  save_manifest(dir / "manifest.json", m);

  const Manifest back = load_manifest(dir / "manifest.json");
  CHECK(to_json(back) == to_json(m));
  const MetaDataset ds = build_dataset(back, dir, minutes{15});
  REQUIRE(ds.train_tasks.size() == 1);
  REQUIRE(ds.test_tasks.size() == 1);
  // same generator parameters, so CSV and synthetic routes agree
  CHECK(ds.train_tasks[0].query[0].y == ds.test_tasks[0].query[0].y);

  const MetaDataset hourly = build_dataset(back, dir, minutes{60});
  CHECK(hourly.test_tasks[0].query[0].y.size() == 24);

  auto doc = to_json(m);
  doc["format_version"] = 9;
  CHECK_THROWS_AS(manifest_from_json(doc), DataError);
  m.tasks.push_back(m.tasks[0]);
  CHECK_THROWS_WITH_AS(build_dataset(m, dir, minutes{15}), doctest::Contains("duplicate task id"), DataError);
  std::filesystem::remove_all(dir);
}
