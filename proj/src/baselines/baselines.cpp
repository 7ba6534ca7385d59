#include "metaload/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "metaload/autodiff/grad.hpp"
#include "metaload/error.hpp"
#include "metaload/meta/maml.hpp"

namespace metaload::baselines {

void BaselineConfig::validate() const {
  arch.validate();
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("baseline.lr: must be positive");
  if (!(pretrain_lr > 0.0) || !std::isfinite(pretrain_lr)) throw ConfigError("baseline.pretrain_lr: must be positive");
  if (!(finetune_lr >= 0.0) || !std::isfinite(finetune_lr))
    throw ConfigError("baseline.finetune_lr: must be non-negative");
  if (batch_size == 0) throw ConfigError("baseline.batch_size: must be positive");
}

nlohmann::json to_json(const BaselineConfig& c) {
  return {{"train_epochs", c.train_epochs}, {"finetune_epochs", c.finetune_epochs},
          {"pretrain_epochs", c.pretrain_epochs}, {"lr", c.lr},
          {"pretrain_lr", c.pretrain_lr},     {"finetune_lr", c.finetune_lr},
          {"batch_size", c.batch_size},
          {"seed", c.seed}};
}

namespace {

metrics::TaskMetrics fit_and_eval(const ad::ParamSet& start, const data::Task& task, std::size_t steps, double lr,
                                  const std::string& label) {
  if (steps == 0) return meta::evaluate_query(start, task, label);
  const auto rates = meta::LearnableRates::uniform(start.layer_count(), steps, lr);
  const auto support = meta::lstm_objective(task).support;
  return meta::evaluate_query(meta::inner_adapt(start, rates, support, steps, false).back(), task, label);
}

}  // namespace

metrics::TaskMetrics train_ts(const data::Task& task, const BaselineConfig& config) {
  config.validate();
  return fit_and_eval(model::init_params(config.arch, config.seed), task, config.train_epochs, config.lr, "ts_lstm");
}

model::Checkpoint pretrain_ti(std::span<const data::Task> meta_train, const BaselineConfig& config) {
  config.validate();
  std::vector<const data::ForecastSample*> pool;
  for (const auto& t : meta_train) {
    for (const auto& s : t.support) pool.push_back(&s);
    for (const auto& s : t.query) pool.push_back(&s);
  }
  if (pool.empty()) throw DataError("pretrain_ti: empty training pool");

  ad::ParamSet theta = model::init_params(config.arch, config.seed);
  const auto rates = meta::LearnableRates::uniform(theta.layer_count(), 1, config.pretrain_lr);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed ^ 0x5eedULL);
  model::Checkpoint ck;
  for (std::size_t epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      std::vector<std::vector<double>> xs, ys;
      for (std::size_t i = b; i < std::min(order.size(), b + config.batch_size); ++i) {
        xs.push_back(pool[order[i]]->x);
        ys.push_back(pool[order[i]]->y);
      }
      const model::Batch batch = model::make_batch(xs, ys);
      ad::Graph g;
      const ad::ParamSet leaves = theta.track(g);
      const ad::Tensor loss = model::mse_loss(leaves, batch);
      const auto grads = ad::grad(loss, leaves.tensors());
      theta = meta::gradient_step(theta, grads, rates, 0);
      loss_sum += loss.item();
      ++batches;
    }
    ck.history.push_back({epoch, loss_sum / static_cast<double>(batches), config.pretrain_lr, false});
  }
  ck.arch = config.arch;
  ck.params = theta;
  ck.config = to_json(config);
  return ck;
}

metrics::TaskMetrics finetune_eval_ti(const model::Checkpoint& checkpoint, const data::Task& task,
                                      const BaselineConfig& config) {
  config.validate();
  if (!checkpoint.params.congruent(model::init_params(config.arch, 0))) {
    throw ShapeError("finetune_eval_ti: checkpoint architecture does not match the baseline config");
  }
  return fit_and_eval(checkpoint.params.detach(), task, config.finetune_epochs,
                      config.finetune_lr > 0.0 ? config.finetune_lr : config.lr, "ti_lstm");
}

}  // namespace metaload::baselines
