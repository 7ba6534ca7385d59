#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace metaload::meta {

/// Per-epoch, per-step query-loss weights, N_e x N_s. Epochs are 1-based.
class WeightSchedule {
 public:
  WeightSchedule(std::size_t epochs, std::size_t steps, double gamma, std::vector<double> values);

  std::size_t epochs() const { return epochs_; }
  std::size_t steps() const { return steps_; }
  double gamma() const { return gamma_; }
  std::span<const double> row(std::size_t epoch) const;
  double at(std::size_t epoch, std::size_t step) const { return row(epoch)[step - 1]; }

 private:
  std::size_t epochs_;
  std::size_t steps_;
  double gamma_;
  std::vector<double> values_;
};

/// Row 1 is uniform. Every later row lowers steps 1..N_s-1 by e/N_s^2 (floor
/// gamma/N_s) and raises the last step by e(N_s-1)/N_s^2 (cap
/// 1 - gamma(N_s-1)/N_s). With freeze_first_step the first step keeps 1/N_s.
///
/// Throws ConfigError unless steps >= 1 and 0 < gamma < 1.
WeightSchedule weight_matrix(std::size_t epochs, std::size_t steps, double gamma, bool freeze_first_step = false);

/// Only the final step counts: [0, ..., 0, 1].
std::vector<double> final_step_weights(std::size_t steps);

struct CosineSchedule {
  double beta_min = 1e-5;
  double beta_max = 1e-3;
  std::size_t max_epochs = 150;

  void validate() const;
};

/// beta_min + (beta_max - beta_min)(1 + cos(pi e / max_epochs)) / 2 for
/// 0 <= e <= max_epochs; throws DomainError otherwise.
double cosine_lr(const CosineSchedule& schedule, double e);

}  // namespace metaload::meta
