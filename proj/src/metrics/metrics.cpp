#include "metaload/metrics/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "metaload/error.hpp"

namespace metaload::metrics {
namespace {

void check_sizes(const char* what, std::span<const double> f, std::span<const double> a) {
  if (f.size() != a.size() || f.empty()) {
    throw DomainError(std::string(what) + ": forecast has " + std::to_string(f.size()) + " points, actual " +
                      std::to_string(a.size()));
  }
}

void check_actual(const char* what, double a, std::size_t i) {
  if (!(a >= kEpsilon)) throw DomainError(std::string(what) + ": actual value " + std::to_string(a) + " at index " +
                                          std::to_string(i) + " is below the positivity floor");
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

double mse(std::span<const double> forecast, std::span<const double> actual) {
  check_sizes("mse", forecast, actual);
  double acc = 0.0;
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    const double d = forecast[i] - actual[i];
    acc += d * d;
  }
  return acc / static_cast<double>(forecast.size());
}

double mape(std::span<const double> forecast, std::span<const double> actual) {
  check_sizes("mape", forecast, actual);
  double acc = 0.0;
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    check_actual("mape", actual[i], i);
    acc += std::abs(forecast[i] - actual[i]) / actual[i];
  }
  return 100.0 * acc / static_cast<double>(forecast.size());
}

double malpe(std::span<const double> forecast, std::span<const double> actual, std::size_t* clamped) {
  check_sizes("malpe", forecast, actual);
  double acc = 0.0;
  std::size_t raised = 0;
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    check_actual("malpe", actual[i], i);
    double f = forecast[i];
    if (!(f >= kEpsilon)) {
      f = kEpsilon;
      ++raised;
    }
    acc += std::abs(std::log(f) - std::log(actual[i]));
  }
  if (clamped != nullptr) *clamped = raised;
  return 100.0 * acc / static_cast<double>(forecast.size());
}

TaskMetrics evaluate(std::string task_id, std::string model, std::string query_month, std::span<const double> forecast,
                     std::span<const double> actual) {
  TaskMetrics m;
  m.task_id = std::move(task_id);
  m.model = std::move(model);
  m.query_month = std::move(query_month);
  m.mse = mse(forecast, actual);
  m.mape_pct = mape(forecast, actual);
  m.malpe_pct = malpe(forecast, actual, &m.clamped);
  m.n_points = forecast.size();
  return m;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw DomainError("summarize: no values");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  Summary s;
  s.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

namespace {

MetricSummary summarize_tasks(const std::vector<const TaskMetrics*>& rows) {
  std::vector<double> a, b, c;
  MetricSummary s;
  for (const auto* r : rows) {
    a.push_back(r->mse);
    b.push_back(r->mape_pct);
    c.push_back(r->malpe_pct);
    s.clamped += r->clamped;
  }
  s.count = rows.size();
  s.mse = summarize(a);
  s.mape = summarize(b);
  s.malpe = summarize(c);
  return s;
}

}  // namespace

AggregateReport aggregate(std::span<const TaskMetrics> results, bool group_by_month) {
  if (results.empty()) throw DomainError("aggregate: no task results");
  std::vector<const TaskMetrics*> all;
  std::map<std::string, std::vector<const TaskMetrics*>> months;
  for (const auto& r : results) {
    all.push_back(&r);
    if (group_by_month) months[r.query_month].push_back(&r);
  }
  AggregateReport report;
  report.overall = summarize_tasks(all);
  for (const auto& [month, rows] : months) report.by_month.emplace(month, summarize_tasks(rows));
  return report;
}

std::string format_summary(const MetricSummary& s) {
  return fmt("%.3f", s.mse.mean) + " ± " + fmt("%.3f", s.mse.std) + ", " + fmt("%.2f", s.mape.mean) + "% ± " +
         fmt("%.2f", s.mape.std) + "%, " + fmt("%.2f", s.malpe.mean) + "% ± " + fmt("%.2f", s.malpe.std) + "%";
}

nlohmann::json to_json(const MetricSummary& s) {
  auto pair = [](const Summary& x) { return nlohmann::json{{"mean", x.mean}, {"std", x.std}}; };
  return {{"count", s.count}, {"mse", pair(s.mse)}, {"mape_pct", pair(s.mape)}, {"malpe_pct", pair(s.malpe)},
          {"clamped_points", s.clamped}};
}

nlohmann::json to_json(const AggregateReport& r) {
  nlohmann::json months = nlohmann::json::object();
  for (const auto& [m, s] : r.by_month) months[m] = to_json(s);
  return {{"overall", to_json(r.overall)}, {"by_month", months}};
}

void write_task_csv(std::ostream& out, std::span<const TaskMetrics> rows, std::span<const std::string> preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "task_id,model,query_month,mse,mape_pct,malpe_pct,n_points,clamped\n";
  for (const auto& r : rows) {
    out << r.task_id << ',' << r.model << ',' << r.query_month << ',' << fmt("%.17g", r.mse) << ','
        << fmt("%.17g", r.mape_pct) << ',' << fmt("%.17g", r.malpe_pct) << ',' << r.n_points << ',' << r.clamped << '\n';
  }
}

std::vector<TaskMetrics> read_task_csv(std::istream& in) {
  std::vector<TaskMetrics> rows;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "task_id,model,query_month,mse,mape_pct,malpe_pct,n_points,clamped") {
        throw DataError("metrics csv line " + std::to_string(lineno) + ": unexpected header");
      }
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw DataError("metrics csv line " + std::to_string(lineno) + ": expected 8 fields");
    try {
      rows.push_back({f[0], f[1], f[2], std::stod(f[3]), std::stod(f[4]), std::stod(f[5]),
                      static_cast<std::size_t>(std::stoull(f[6])), static_cast<std::size_t>(std::stoull(f[7]))});
    } catch (const std::exception&) {
      throw DataError("metrics csv line " + std::to_string(lineno) + ": malformed number");
    }
  }
  if (!header) throw DataError("metrics csv: missing header");
  return rows;
}

}  // namespace metaload::metrics
