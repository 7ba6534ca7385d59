#include "metaload/meta/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "metaload/error.hpp"

namespace metaload::meta {

WeightSchedule::WeightSchedule(std::size_t epochs, std::size_t steps, double gamma, std::vector<double> values)
    : epochs_(epochs), steps_(steps), gamma_(gamma), values_(std::move(values)) {
  if (values_.size() != epochs_ * steps_) throw ShapeError("WeightSchedule: value count does not match N_e x N_s");
}

std::span<const double> WeightSchedule::row(std::size_t epoch) const {
  if (epoch < 1 || epoch > epochs_) {
    throw DomainError("WeightSchedule: epoch " + std::to_string(epoch) + " outside 1.." + std::to_string(epochs_));
  }
  return std::span<const double>(values_).subspan((epoch - 1) * steps_, steps_);
}

WeightSchedule weight_matrix(std::size_t epochs, std::size_t steps, double gamma, bool freeze_first_step) {
  if (steps < 1) throw ConfigError("meta.inner_steps: must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("meta.gamma: must lie in (0, 1)");
  const double ns = static_cast<double>(steps);
  const double floor_w = gamma / ns;
  const double cap = 1.0 - gamma * (ns - 1.0) / ns;

  std::vector<double> v(epochs * steps);
  for (std::size_t e = 1; e <= epochs; ++e) {
    double* cur = v.data() + (e - 1) * steps;
    if (e == 1) {
      std::fill(cur, cur + steps, 1.0 / ns);
      continue;
    }
    if (steps == 1) {
      cur[0] = 1.0;
      continue;
    }
    const double* prev = cur - steps;
    const double de = static_cast<double>(e);
    for (std::size_t k = 0; k + 1 < steps; ++k) {
      cur[k] = (k == 0 && freeze_first_step) ? prev[k] : std::max(prev[k] - de / (ns * ns), floor_w);
    }
    cur[steps - 1] = std::min(prev[steps - 1] + de * (ns - 1.0) / (ns * ns), cap);
  }
  return WeightSchedule(epochs, steps, gamma, std::move(v));
}

std::vector<double> final_step_weights(std::size_t steps) {
  if (steps < 1) throw ConfigError("meta.inner_steps: must be at least 1");
  std::vector<double> w(steps, 0.0);
  w.back() = 1.0;
  return w;
}

void CosineSchedule::validate() const {
  if (!(beta_min > 0.0)) throw ConfigError("meta.beta_min: must be positive");
  if (!(beta_max >= beta_min)) throw ConfigError("meta.beta_max: must be at least meta.beta_min");
  if (max_epochs == 0) throw ConfigError("meta.cosine_max_epochs: must be positive");
}

double cosine_lr(const CosineSchedule& schedule, double e) {
  const double emax = static_cast<double>(schedule.max_epochs);
  if (!(e >= 0.0 && e <= emax)) {
    throw DomainError("cosine_lr: epoch " + std::to_string(e) + " outside [0, " + std::to_string(schedule.max_epochs) + "]");
  }
  if (e == 0.0) return schedule.beta_max;
  if (e == emax) return schedule.beta_min;
  return schedule.beta_min +
         0.5 * (schedule.beta_max - schedule.beta_min) * (1.0 + std::cos(std::numbers::pi * e / emax));
}

}  // namespace metaload::meta
