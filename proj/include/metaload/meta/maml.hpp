#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "metaload/autodiff/graph.hpp"
#include "metaload/autodiff/param_set.hpp"
#include "metaload/data/task.hpp"
#include "metaload/meta/schedule.hpp"
#include "metaload/metrics/metrics.hpp"
#include "metaload/model/checkpoint.hpp"
#include "metaload/parallel.hpp"

namespace metaload::meta {

using ad::Graph;
using ad::ParamSet;
using ad::Tensor;

/// One inner-loop rate per (layer, step), stored as scalar tensors so they can
/// be tracked and meta-learned. Values may become negative during training.
class LearnableRates {
 public:
  LearnableRates() = default;
  static LearnableRates uniform(std::size_t layers, std::size_t steps, double alpha);
  /// rows = layers, columns = steps
  static LearnableRates from_matrix(const std::vector<std::vector<double>>& rows);

  std::size_t layers() const { return layers_; }
  std::size_t steps() const { return steps_; }
  /// `step` is 0-based.
  const Tensor& at(std::size_t layer, std::size_t step) const { return values_[layer * steps_ + step]; }

  /// Layer-major.
  const std::vector<Tensor>& tensors() const { return values_; }
  LearnableRates with_values(std::vector<Tensor> values) const;
  LearnableRates track(Graph& g) const;
  std::vector<std::vector<double>> matrix() const;

 private:
  std::size_t layers_ = 0;
  std::size_t steps_ = 0;
  std::vector<Tensor> values_;
};

using LossFn = std::function<Tensor(const ParamSet&)>;

/// Support and query losses of one task.
struct TaskObjective {
  std::string id;
  LossFn support;
  LossFn query;
};

/// MSE of the base learner on the task's support and query batches.
TaskObjective lstm_objective(const data::Task& task);

/// theta - rate(layer, step) * grad for every entry.
ParamSet gradient_step(const ParamSet& theta, std::span<const Tensor> grads, const LearnableRates& rates,
                       std::size_t step);

/// Returns theta^1..theta^steps. When theta0 is tracked, every iterate stays
/// on its graph; with create_graph the inner gradients are recorded too, so
/// the iterates are differentiable through the gradients (second order).
/// When theta0 is untracked each step runs on a private graph and the
/// iterates are plain values.
std::vector<ParamSet> inner_adapt(const ParamSet& theta0, const LearnableRates& rates, const LossFn& support,
                                  std::size_t steps, bool create_graph);

/// sum_i sum_k w_k L_Q_i(theta_i^k) with theta_i^k from inner_adapt on each
/// task's support set. Zero-weight steps do not evaluate their query loss.
Tensor multi_step_meta_loss(const ParamSet& theta0, const LearnableRates& rates, std::span<const TaskObjective> tasks,
                            std::span<const double> weights, bool create_graph);

/// Gradient-descent update of theta0 and (if learn_rates) the rates from a
/// meta-loss recorded on their graph. Returns detached values.
std::pair<ParamSet, LearnableRates> outer_step(const ParamSet& theta0, const LearnableRates& rates,
                                               const Tensor& meta_loss, double beta, bool learn_rates = true);

/// Meta-loss and its gradients, each task on its own graph, reduced in task
/// order. theta0 and rates are untracked.
struct MetaGradient {
  double loss = 0.0;
  std::vector<double> theta;  // flattened like ParamSet::flatten
  std::vector<double> rates;  // layer-major
};

MetaGradient meta_gradient(const ParamSet& theta0, const LearnableRates& rates, std::span<const TaskObjective> tasks,
                           std::span<const double> weights, bool second_order, Execution execution = Execution::parallel);

enum class Mode { maml_pp, vanilla_maml };
enum class OuterOptimizer { sgd, adam };

struct MetaTrainConfig {
  std::size_t epochs = 150;
  std::size_t inner_steps = 1;
  std::size_t first_order_epochs = 50;  // epochs 1..this use the first-order approximation
  double gamma = 0.1;
  double alpha_init = 0.01;
  CosineSchedule cosine{1e-5, 1e-3, 0};  // max_epochs 0 means `epochs`
  Mode mode = Mode::maml_pp;
  OuterOptimizer optimizer = OuterOptimizer::sgd;
  bool learn_rates = true;
  bool freeze_first_step_weight = false;
  std::uint64_t seed = 1;
  Execution execution = Execution::parallel;

  /// Throws ConfigError naming the field.
  void validate() const;
  CosineSchedule resolved_cosine() const;
};

nlohmann::json to_json(const MetaTrainConfig& config);

/// Beta used by epoch e (1-based): cosine_lr at e - 1.
double epoch_beta(const MetaTrainConfig& config, std::size_t epoch);

struct MetaTrainResult {
  ParamSet theta0;
  LearnableRates rates;
  std::vector<model::HistoryEntry> history;
};

using EpochCallback = std::function<void(const model::HistoryEntry&)>;

/// Algorithm loop over generic objectives. Throws DomainError naming the epoch
/// (and task or gradient norm) when a loss or gradient is not finite.
MetaTrainResult meta_train(const MetaTrainConfig& config, const ParamSet& init, std::span<const TaskObjective> tasks,
                           const EpochCallback& on_epoch = {});

/// Meta-trains the LSTM from init_params(arch, config.seed).
model::Checkpoint meta_train(const MetaTrainConfig& config, const model::ArchConfig& arch,
                             std::span<const data::Task> train_tasks, const EpochCallback& on_epoch = {});

/// Query-set metrics of fixed parameters.
metrics::TaskMetrics evaluate_query(const ParamSet& params, const data::Task& task, const std::string& model);

/// Adapts a copy of the checkpoint to the task support with the learned rates
/// (fixed alpha_init rates when the checkpoint has none) and scores theta^steps
/// on the query set. steps = 0 scores the initialization.
metrics::TaskMetrics adapt_and_eval(const model::Checkpoint& checkpoint, const data::Task& task, std::size_t steps,
                                    const std::string& model = "proposed", double fallback_alpha = 0.01);

}  // namespace metaload::meta
