#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "metaload/error.hpp"
#include "metaload/metrics/metrics.hpp"

using namespace metaload;
using namespace metaload::metrics;

namespace {
using V = std::vector<double>;
}

TEST_CASE("mape examples") {
  CHECK(mape(V{1, 2, 3}, V{1, 2, 3}) == 0.0);
  CHECK(mape(V{0.5}, V{1}) == doctest::Approx(50.0));
  CHECK(mape(V{2}, V{1}) == doctest::Approx(100.0));
  CHECK(mape(V{2, 4}, V{1, 2}) == doctest::Approx(mape(V{6, 12}, V{3, 6})));
  CHECK_THROWS_AS(mape(V{1}, V{0}), DomainError);
  CHECK_THROWS_AS(mape(V{1, 2}, V{1}), DomainError);
}

TEST_CASE("malpe examples") {
  const double e = std::numbers::e;
  CHECK(malpe(V{1, 2}, V{1, 2}) == 0.0);
  CHECK(malpe(V{e}, V{1}) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(malpe(V{1 / e}, V{1}) == doctest::Approx(100.0).epsilon(1e-14));
  std::size_t clamped = 0;
  malpe(V{-0.5, 1}, V{1, 1}, &clamped);
  CHECK(clamped == 1);
  CHECK_THROWS_AS(malpe(V{1}, V{0}), DomainError);
}

TEST_CASE("malpe is symmetric") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.01, 10.0);
  for (int t = 0; t < 200; ++t) {
    V a(16), b(16);
    for (auto& v : a) v = d(rng);
    for (auto& v : b) v = d(rng);
    CHECK(malpe(a, b) == malpe(b, a));
  }
}

TEST_CASE("mse examples") {
  CHECK(mse(V{1, 2}, V{1, 2}) == 0.0);
  CHECK(mse(V{1, 3}, V{0, 0}) == 5.0);
}

TEST_CASE("evaluate fills every field") {
  const auto m = evaluate("t1", "proposed", "2021-02", V{1, 2}, V{1, 1});
  CHECK(m.mse == 0.5);
  CHECK(m.mape_pct == 50.0);
  CHECK(m.n_points == 2);
  CHECK(m.query_month == "2021-02");
}

TEST_CASE("aggregate") {
  std::vector<TaskMetrics> rows{{"a", "m", "2021-01", 0.02, 10, 9, 7, 0}, {"b", "m", "2021-02", 0.04, 20, 19, 7, 1}};
  const auto one = aggregate(std::span(rows).first(1), false);
  CHECK(one.overall.mse.mean == 0.02);
  CHECK(one.overall.mse.std == 0.0);
  const auto r = aggregate(rows, true);
  CHECK(r.overall.mse.mean == doctest::Approx(0.03));
  CHECK(r.overall.mse.std == doctest::Approx(std::sqrt(2.0) * 0.01));
  CHECK(r.overall.clamped == 1);
  CHECK(r.by_month.size() == 2);
  CHECK(r.by_month.at("2021-02").mape.mean == 20.0);
  CHECK_THROWS_AS(aggregate(std::span<const TaskMetrics>{}, false), DomainError);

  MetricSummary s;
  s.mse = {0.035, 0.017};
  s.mape = {15.0, 2.92};
  s.malpe = {14.72, 2.52};
  CHECK(format_summary(s) == "0.035 ± 0.017, 15.00% ± 2.92%, 14.72% ± 2.52%");
}

TEST_CASE("task csv round trip") {
  std::vector<TaskMetrics> rows{{"a", "ts", "2021-01", 0.1 / 3, 12.5, 11.25, 168, 0}};
  std::stringstream ss;
  const std::vector<std::string> pre{"config_hash=abc, seed=1"};
  write_task_csv(ss, rows, pre);
  CHECK(ss.str().rfind("# config_hash=abc", 0) == 0);
  const auto back = read_task_csv(ss);
  REQUIRE(back.size() == 1);
  CHECK(back[0].mse == rows[0].mse);
  CHECK(back[0].model == "ts");
  std::stringstream bad("task_id,model\n");
  CHECK_THROWS_AS(read_task_csv(bad), DataError);
}
