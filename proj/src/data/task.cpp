#include "metaload/data/task.hpp"

#include <algorithm>
#include <set>

#include "metaload/error.hpp"

namespace metaload::data {

using namespace std::chrono;

namespace {

model::Batch to_batch(const std::vector<ForecastSample>& samples) {
  std::vector<std::vector<double>> xs, ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  for (const auto& s : samples) {
    xs.push_back(s.x);
    ys.push_back(s.y);
  }
  return model::make_batch(xs, ys);
}

ForecastSample make_sample(const TimeSeries& series, std::size_t first, std::size_t input_days) {
  const std::size_t spd = series.samples_per_day();
  const auto begin = series.values.begin() + static_cast<std::ptrdiff_t>(first);
  ForecastSample s;
  s.x.assign(begin, begin + static_cast<std::ptrdiff_t>(input_days * spd));
  s.y.assign(begin + static_cast<std::ptrdiff_t>(input_days * spd),
             begin + static_cast<std::ptrdiff_t>((input_days + 1) * spd));
  s.input_start = series.time_at(first);
  s.output_start = series.time_at(first + input_days * spd);
  return s;
}

std::size_t first_midnight(const TimeSeries& series) {
  const auto since = series.start - floor<days>(series.start);
  if (since == seconds{0}) return 0;
  const auto rest = days{1} - since;
  if (rest % series.resolution != seconds{0}) {
    throw DataError("series " + series.id + " is not aligned to its resolution");
  }
  return static_cast<std::size_t>(rest / series.resolution);
}

}  // namespace

std::string Task::query_month() const {
  if (query.empty()) throw DataError("task " + id + " has no query set");
  return month_key(query[query.size() / 2].output_start);
}

model::Batch Task::support_batch() const { return to_batch(support); }
model::Batch Task::query_batch() const { return to_batch(query); }

std::size_t whole_days(const TimeSeries& series) {
  const std::size_t skip = first_midnight(series);
  if (skip >= series.values.size()) return 0;
  return (series.values.size() - skip) / series.samples_per_day();
}

Task build_task_unscaled(const TimeSeries& series, std::size_t support_months, const WindowPolicy& policy) {
  validate(series);
  if (policy.input_days == 0 || policy.query_samples == 0 || policy.support_stride_days == 0) {
    throw ConfigError("window policy counts must be positive");
  }
  const std::size_t spd = series.samples_per_day();
  const std::size_t available = whole_days(series);
  const std::size_t minimum = policy.query_span_days() + policy.sample_days();
  const std::size_t window = support_months == 0 ? available : support_months * policy.days_per_month;
  const std::size_t required = std::max(window, minimum);
  if (available < required) {
    throw DataError("series " + series.id + ": insufficient length, required " + std::to_string(required) +
                    " days, available " + std::to_string(available));
  }

  // Day d of the task window starts at reading `origin + d * spd`.
  const std::size_t origin = first_midnight(series) + (available - window) * spd;
  const std::size_t support_days = window - policy.query_span_days();

  Task task;
  task.id = series.id;
  for (std::size_t d = 0; d + policy.sample_days() <= support_days; d += policy.support_stride_days) {
    task.support.push_back(make_sample(series, origin + d * spd, policy.input_days));
  }
  for (std::size_t q = 0; q < policy.query_samples; ++q) {
    task.query.push_back(make_sample(series, origin + (support_days + q) * spd, policy.input_days));
  }
  task.source_range = {series.time_at(origin), series.time_at(origin + window * spd)};
  return task;
}

Task build_task(const TimeSeries& series, std::size_t support_months, const WindowPolicy& policy) {
  return scale_task(build_task_unscaled(series, support_months, policy));
}

Task scale_task(const Task& task) {
  double peak = 0.0;
  for (const auto& s : task.support) {
    for (double v : s.x) peak = std::max(peak, v);
    for (double v : s.y) peak = std::max(peak, v);
  }
  if (!(peak > 0.0)) throw DataError("task " + task.id + ": support region is all zero");
  Task out = task;
  auto divide = [peak](std::vector<ForecastSample>& samples) {
    for (auto& s : samples) {
      for (double& v : s.x) v /= peak;
      for (double& v : s.y) v /= peak;
    }
  };
  divide(out.support);
  divide(out.query);
  out.scale = task.scale * peak;
  return out;
}

Task unscale_task(const Task& task) {
  Task out = task;
  auto multiply = [s = task.scale](std::vector<ForecastSample>& samples) {
    for (auto& smp : samples) {
      for (double& v : smp.x) v *= s;
      for (double& v : smp.y) v *= s;
    }
  };
  multiply(out.support);
  multiply(out.query);
  out.scale = 1.0;
  return out;
}

void MetaDataset::validate() const {
  std::set<std::string> ids;
  auto check = [&](const Task& t) {
    if (!ids.insert(t.id).second) throw DataError("duplicate task id " + t.id);
    if (t.support.empty()) throw DataError("task " + t.id + " has an empty support set");
    if (t.query.empty()) throw DataError("task " + t.id + " has an empty query set");
    if (!(t.scale > 0.0)) throw DataError("task " + t.id + " has a non-positive scale");
    if (t.support.back().output_start + days{1} > t.query.front().input_start) {
      throw DataError("task " + t.id + ": support region does not precede the query region");
    }
  };
  for (const auto& t : train_tasks) check(t);
  for (const auto& t : test_tasks) check(t);
}

}  // namespace metaload::data
