#include "metaload/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "metaload/error.hpp"
#include "metaload/parallel.hpp"

namespace metaload::data {

using namespace std::chrono;

std::string role_name(Role role) { return role == Role::train ? "train" : "test"; }

Role parse_role(const std::string& text) {
  if (text == "train") return Role::train;
  if (text == "test") return Role::test;
  throw DataError("unknown role '" + text + "' (expected train or test)");
}

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(std::string("data.") + field + ": " + what);
  };
  require(n_consumers >= 1, "n_consumers", "must be at least 1");
  require(train_min_months >= 1 && train_min_months <= train_max_months, "train_min_months",
          "must be in 1..train_max_months");
  require(!test_months.empty() || test_series_months > 0, "test_months", "must not be empty");
  for (std::size_t m : test_months) require(m >= 1, "test_months", "lengths must be positive");
  require(grid_months >= 1, "grid_months", "must be at least 1");
  require(test_start_months <= grid_months, "test_start_months", "exceeds grid_months");
  require(test_support_months <= test_series_months, "test_support_months", "exceeds test_series_months");
  require(first_month.ok(), "first_month", "invalid month");
  require(resolution > minutes{0} && resolution % minutes{15} == minutes{0} && minutes{days{1}} % resolution == minutes{0},
          "resolution_minutes", "must be a multiple of 15 dividing a day");
}

namespace {

constexpr std::size_t kDaysPerMonth = 30;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return splitmix(splitmix(seed ^ splitmix(tag)) + index);
}

sys_days grid_day(const SynthConfig& c, std::size_t month_offset) {
  return sys_days{(c.first_month + months{static_cast<int>(month_offset)}) / 1};
}

enum Archetype { residential, evening, business, heating, kArchetypes };

struct Consumer {
  Archetype kind = residential;
  double base = 0.1;
  double morning_h = 7.5;
  double evening_h = 19.0;
  double morning_amp = 1.0;
  double evening_amp = 1.5;
  double season_amp = 0.25;
};

double bump(double h, double mu, double width) {
  double d = h - mu;
  if (d > 12.0) d -= 24.0;
  if (d < -12.0) d += 24.0;
  return std::exp(-0.5 * (d / width) * (d / width));
}

double plateau(double h, double from, double to) {
  return 1.0 / (1.0 + std::exp(-2.0 * (h - from))) / (1.0 + std::exp(-2.0 * (to - h)));
}

double shape(const Consumer& c, double h, bool weekend, double cold) {
  switch (c.kind) {
    case residential:
      if (weekend) {
        return 0.5 + 0.8 * c.morning_amp * bump(h, c.morning_h + 1.5, 1.4) + 0.4 * bump(h, 13.0, 2.0) +
               c.evening_amp * bump(h, c.evening_h, 1.8);
      }
      return 0.5 + c.morning_amp * bump(h, c.morning_h, 1.0) + 0.2 * bump(h, 13.0, 2.0) +
             c.evening_amp * bump(h, c.evening_h, 1.8);
    case evening:
      if (weekend) return 0.4 + 0.6 * bump(h, 14.0, 3.0) + 1.2 * c.evening_amp * bump(h, c.evening_h, 1.8);
      return 0.4 + 0.4 * c.morning_amp * bump(h, c.morning_h - 0.5, 0.7) +
             1.4 * c.evening_amp * bump(h, c.evening_h + 0.5, 1.5);
    case business:
      return 0.3 + (weekend ? 0.3 : 2.0) * plateau(h, 8.0, 18.0);
    case heating:
    case kArchetypes:
      break;
  }
  const double home = 0.4 + 0.6 * c.morning_amp * bump(h, c.morning_h, 1.0) + 0.8 * c.evening_amp * bump(h, c.evening_h, 1.8);
  return home + 2.5 * cold * (bump(h, 3.0, 2.0) + 0.6 * bump(h, c.evening_h, 2.5) + (weekend ? 0.3 : 0.0));
}

}  // namespace

std::vector<SeriesSpec> synth_plan(const SynthConfig& config) {
  config.validate();
  std::vector<SeriesSpec> plan;
  auto base = [&](std::string id, Role role, sys_days start, std::size_t days_long, std::uint64_t seed) {
    SeriesSpec s;
    s.id = std::move(id);
    s.role = role;
    s.start = start;
    s.days = days_long;
    s.seed = seed;
    s.n_consumers = config.n_consumers;
    s.resolution = config.resolution;
    s.winter_peaking = config.winter_peaking;
    return s;
  };

  std::mt19937_64 rng(derive_seed(config.seed, 1, 0));
  std::uniform_int_distribution<std::size_t> pick_month(0, config.grid_months - 1);
  std::uniform_int_distribution<std::size_t> pick_len(config.train_min_months, config.train_max_months);
  for (std::size_t i = 0; i < config.train_tasks; ++i) {
    const std::size_t m = pick_month(rng);
    const std::size_t len = pick_len(rng);
    plan.push_back(base("train_" + std::to_string(i), Role::train, grid_day(config, m), len * kDaysPerMonth,
                        derive_seed(config.seed, 2, i)));
  }

  const std::vector<std::size_t> lengths =
      config.test_series_months > 0 ? std::vector<std::size_t>{config.test_series_months} : config.test_months;
  std::size_t index = 0;
  for (std::size_t m = 0; m < config.test_start_months; ++m) {
    for (std::size_t len : lengths) {
      for (std::size_t r = 0; r < config.test_per_length; ++r, ++index) {
        SeriesSpec s = base("test_" + std::to_string(index), Role::test, grid_day(config, m), len * kDaysPerMonth,
                            derive_seed(config.seed, 3, index));
        s.support_months = config.test_support_months;
        plan.push_back(std::move(s));
      }
    }
  }
  return plan;
}

TimeSeries synth_series(const SeriesSpec& spec) {
  if (spec.days == 0 || spec.n_consumers == 0) throw ConfigError("synth_series: days and n_consumers must be positive");
  constexpr std::size_t spd = 96;
  const std::size_t n = spec.days * spd;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Per-series archetype mixture (Dirichlet via normalized gammas).
  std::array<double, kArchetypes> mix{};
  std::gamma_distribution<double> gamma(0.7, 1.0);
  double total = 0.0;
  for (double& w : mix) total += (w = gamma(rng) + 1e-3);
  for (double& w : mix) w /= total;
  std::discrete_distribution<int> pick_kind(mix.begin(), mix.end());
  const double climate = 0.5 + unif(rng);

  // Shared day-to-day weather factor.
  std::vector<double> weather(spec.days);
  double w = 0.0;
  for (double& x : weather) x = w = 0.7 * w + 0.06 * normal(rng);

  const double peak_doy = spec.winter_peaking ? 15.0 : 196.0;
  std::vector<double> season(spec.days), cold(spec.days);
  std::vector<bool> weekend(spec.days);
  for (std::size_t d = 0; d < spec.days; ++d) {
    const sys_days day = spec.start + days{static_cast<long>(d)};
    const year_month_day ymd{day};
    const double doy = static_cast<double>((day - sys_days{ymd.year() / January / 1}).count());
    season[d] = std::cos(2.0 * std::numbers::pi * (doy - peak_doy) / 365.25);
    cold[d] = std::max(0.0, season[d]) * climate;
    const weekday wd{day};
    weekend[d] = wd == Saturday || wd == Sunday;
  }

  std::vector<double> values(n, 0.0);
  for (std::size_t c = 0; c < spec.n_consumers; ++c) {
    Consumer con;
    con.kind = static_cast<Archetype>(pick_kind(rng));
    con.base = 0.1 * std::exp(0.35 * normal(rng));
    con.morning_h = 7.0 + 1.0 * unif(rng);
    con.evening_h = 18.0 + 2.5 * unif(rng);
    con.morning_amp = 0.6 + 0.8 * unif(rng);
    con.evening_amp = 1.0 + 1.2 * unif(rng);
    con.season_amp = climate * (0.15 + 0.2 * unif(rng));
    double noise = 0.0;
    for (std::size_t d = 0; d < spec.days; ++d) {
      const double level = con.base * (1.0 + con.season_amp * season[d]) * std::exp(weather[d]);
      for (std::size_t s = 0; s < spd; ++s) {
        noise = 0.95 * noise + 0.08 * normal(rng);
        const double h = (static_cast<double>(s) + 0.5) * 0.25;
        const double v = level * shape(con, h, weekend[d], cold[d]) * std::exp(noise);
        values[d * spd + s] += std::max(0.0, v);
      }
    }
  }

  TimeSeries series{spec.id, TimePoint{spec.start}, minutes{15}, std::move(values)};
  return spec.resolution == minutes{15} ? series : resample(series, spec.resolution);
}

MetaDataset synth_meta_dataset(const SynthConfig& config, const WindowPolicy& policy) {
  const auto plan = synth_plan(config);
  MetaDataset ds;
  std::vector<Task> tasks(plan.size());
  for_each_index(plan.size(), Execution::parallel,
                 [&](std::size_t i) { tasks[i] = build_task(synth_series(plan[i]), plan[i].support_months, policy); });
  for (std::size_t i = 0; i < plan.size(); ++i) {
    (plan[i].role == Role::train ? ds.train_tasks : ds.test_tasks).push_back(std::move(tasks[i]));
  }
  ds.validate();
  return ds;
}

}  // namespace metaload::data
