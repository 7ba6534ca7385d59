#include "metaload/meta/maml.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include "metaload/autodiff/grad.hpp"
#include "metaload/autodiff/ops.hpp"
#include "metaload/error.hpp"
#include "metaload/model/lstm.hpp"

namespace metaload::meta {

LearnableRates LearnableRates::uniform(std::size_t layers, std::size_t steps, double alpha) {
  if (layers == 0 || steps == 0) throw ConfigError("learnable rates need at least one layer and one step");
  if (!std::isfinite(alpha)) throw ConfigError("meta.alpha_init: must be finite");
  LearnableRates r;
  r.layers_ = layers;
  r.steps_ = steps;
  r.values_.assign(layers * steps, Tensor::scalar(alpha));
  return r;
}

LearnableRates LearnableRates::from_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw DataError("learned rates: empty matrix");
  LearnableRates r;
  r.layers_ = rows.size();
  r.steps_ = rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != r.steps_) throw DataError("learned rates: ragged matrix");
    for (double a : row) r.values_.push_back(Tensor::scalar(a));
  }
  return r;
}

LearnableRates LearnableRates::with_values(std::vector<Tensor> values) const {
  if (values.size() != values_.size()) throw ShapeError("learnable rates: expected " + std::to_string(values_.size()) + " values");
  LearnableRates r = *this;
  r.values_ = std::move(values);
  return r;
}

LearnableRates LearnableRates::track(Graph& g) const {
  std::vector<Tensor> t;
  t.reserve(values_.size());
  for (const auto& v : values_) t.push_back(g.leaf(v));
  return with_values(std::move(t));
}

std::vector<std::vector<double>> LearnableRates::matrix() const {
  std::vector<std::vector<double>> m(layers_, std::vector<double>(steps_));
  for (std::size_t l = 0; l < layers_; ++l) {
    for (std::size_t k = 0; k < steps_; ++k) m[l][k] = at(l, k).item();
  }
  return m;
}

TaskObjective lstm_objective(const data::Task& task) {
  auto support = std::make_shared<const model::Batch>(task.support_batch());
  auto query = std::make_shared<const model::Batch>(task.query_batch());
  return {task.id, [support](const ParamSet& p) { return model::mse_loss(p, *support); },
          [query](const ParamSet& p) { return model::mse_loss(p, *query); }};
}

ParamSet gradient_step(const ParamSet& theta, std::span<const Tensor> grads, const LearnableRates& rates,
                       std::size_t step) {
  if (grads.size() != theta.size()) throw ShapeError("gradient_step: gradient count does not match parameters");
  if (rates.layers() != theta.layer_count()) {
    throw ShapeError("gradient_step: " + std::to_string(rates.layers()) + " rate rows for " +
                     std::to_string(theta.layer_count()) + " layers");
  }
  if (step >= rates.steps()) throw ShapeError("gradient_step: no rate for step " + std::to_string(step + 1));
  std::vector<Tensor> next;
  next.reserve(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    next.push_back(ad::sub(theta[i], ad::scale(rates.at(theta.layer_of(i), step), grads[i])));
  }
  return theta.with_values(std::move(next));
}

std::vector<ParamSet> inner_adapt(const ParamSet& theta0, const LearnableRates& rates, const LossFn& support,
                                  std::size_t steps, bool create_graph) {
  if (steps > rates.steps()) {
    throw ConfigError("inner_adapt: " + std::to_string(steps) + " steps but rates for " + std::to_string(rates.steps()));
  }
  const bool tracked = theta0.size() > 0 && theta0[0].tracked();
  std::vector<ParamSet> iterates;
  iterates.reserve(steps);
  ParamSet cur = theta0;
  for (std::size_t k = 0; k < steps; ++k) {
    if (tracked) {
      const auto g = ad::grad(support(cur), cur.tensors(), {create_graph, true});
      cur = gradient_step(cur, g, rates, k);
    } else {
      Graph graph;
      const ParamSet leaves = cur.track(graph);
      const auto g = ad::grad(support(leaves), leaves.tensors(), {false, true});
      cur = gradient_step(cur, g, rates, k);
    }
    iterates.push_back(cur);
  }
  return iterates;
}

Tensor multi_step_meta_loss(const ParamSet& theta0, const LearnableRates& rates, std::span<const TaskObjective> tasks,
                            std::span<const double> weights, bool create_graph) {
  if (tasks.empty()) throw DataError("multi_step_meta_loss: no tasks");
  if (weights.empty()) throw ConfigError("multi_step_meta_loss: empty weight row");
  Tensor total;
  bool have = false;
  for (const auto& task : tasks) {
    const auto iterates = inner_adapt(theta0, rates, task.support, weights.size(), create_graph);
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k] == 0.0) continue;
      const Tensor term = ad::scalar_mul(task.query(iterates[k]), weights[k]);
      total = have ? ad::add(total, term) : term;
      have = true;
    }
  }
  if (!have) throw ConfigError("multi_step_meta_loss: all weights are zero");
  return total;
}

namespace {

std::vector<Tensor> joined(const ParamSet& theta, const LearnableRates& rates) {
  std::vector<Tensor> wrt = theta.tensors();
  wrt.insert(wrt.end(), rates.tensors().begin(), rates.tensors().end());
  return wrt;
}

void append(std::vector<double>& out, const Tensor& t) { out.insert(out.end(), t.data().begin(), t.data().end()); }

}  // namespace

std::pair<ParamSet, LearnableRates> outer_step(const ParamSet& theta0, const LearnableRates& rates,
                                               const Tensor& meta_loss, double beta, bool learn_rates) {
  const auto grads = ad::grad(meta_loss, joined(theta0, rates), {false, true});
  std::vector<Tensor> theta_next, rates_next;
  for (std::size_t i = 0; i < theta0.size(); ++i) {
    theta_next.push_back(ad::sub(theta0[i].detach(), ad::scalar_mul(grads[i], beta)));
  }
  for (std::size_t j = 0; j < rates.tensors().size(); ++j) {
    const Tensor& a = rates.tensors()[j];
    rates_next.push_back(learn_rates ? ad::sub(a.detach(), ad::scalar_mul(grads[theta0.size() + j], beta)) : a.detach());
  }
  return {theta0.with_values(std::move(theta_next)), rates.with_values(std::move(rates_next))};
}

MetaGradient meta_gradient(const ParamSet& theta0, const LearnableRates& rates, std::span<const TaskObjective> tasks,
                           std::span<const double> weights, bool second_order, Execution execution) {
  std::vector<MetaGradient> parts(tasks.size());
  for_each_index(tasks.size(), execution, [&](std::size_t i) {
    try {
      Graph g;
      const ParamSet th = theta0.track(g);
      const LearnableRates r = rates.track(g);
      const Tensor loss = multi_step_meta_loss(th, r, tasks.subspan(i, 1), weights, second_order);
      const auto grads = ad::grad(loss, joined(th, r), {false, true});
      MetaGradient& p = parts[i];
      p.loss = loss.item();
      for (std::size_t j = 0; j < th.size(); ++j) append(p.theta, grads[j]);
      for (std::size_t j = th.size(); j < grads.size(); ++j) append(p.rates, grads[j]);
    } catch (const DomainError& e) {
      throw DomainError("task " + tasks[i].id + ": " + e.what());
    }
  });
  MetaGradient total = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    total.loss += parts[i].loss;
    for (std::size_t j = 0; j < total.theta.size(); ++j) total.theta[j] += parts[i].theta[j];
    for (std::size_t j = 0; j < total.rates.size(); ++j) total.rates[j] += parts[i].rates[j];
  }
  return total;
}

void MetaTrainConfig::validate() const {
  if (inner_steps < 1) throw ConfigError("meta.inner_steps: must be at least 1");
  if (first_order_epochs > epochs) throw ConfigError("meta.first_order_epochs: exceeds meta.epochs");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("meta.gamma: must lie in (0, 1)");
  if (!std::isfinite(alpha_init)) throw ConfigError("meta.alpha_init: must be finite");
  if (epochs > 0) resolved_cosine().validate();
}

CosineSchedule MetaTrainConfig::resolved_cosine() const {
  CosineSchedule c = cosine;
  if (c.max_epochs == 0) c.max_epochs = epochs;
  return c;
}

nlohmann::json to_json(const MetaTrainConfig& c) {
  return {{"epochs", c.epochs},
          {"inner_steps", c.inner_steps},
          {"first_order_epochs", c.first_order_epochs},
          {"gamma", c.gamma},
          {"alpha_init", c.alpha_init},
          {"beta_min", c.cosine.beta_min},
          {"beta_max", c.cosine.beta_max},
          {"cosine_max_epochs", c.resolved_cosine().max_epochs},
          {"mode", c.mode == Mode::maml_pp ? "maml_pp" : "vanilla_maml"},
          {"optimizer", c.optimizer == OuterOptimizer::sgd ? "sgd" : "adam"},
          {"learn_rates", c.learn_rates},
          {"freeze_first_step_weight", c.freeze_first_step_weight},
          {"seed", c.seed}};
}

double epoch_beta(const MetaTrainConfig& config, std::size_t epoch) {
  return cosine_lr(config.resolved_cosine(), static_cast<double>(epoch - 1));
}

namespace {

class Adam {
 public:
  explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& x, const std::vector<double>& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kB1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kB2, static_cast<double>(t_));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[i] = kB1 * m_[i] + (1.0 - kB1) * g[i];
      v_[i] = kB2 * v_[i] + (1.0 - kB2) * g[i] * g[i];
      x[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kB1 = 0.9, kB2 = 0.999, kEps = 1e-8;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

std::vector<double> flat_rates(const LearnableRates& r) {
  std::vector<double> out;
  for (const auto& t : r.tensors()) out.push_back(t.item());
  return out;
}

}  // namespace

MetaTrainResult meta_train(const MetaTrainConfig& config, const ParamSet& init, std::span<const TaskObjective> tasks,
                           const EpochCallback& on_epoch) {
  config.validate();
  if (tasks.empty()) throw DataError("meta_train: empty meta-train set");
  MetaTrainResult result{init.detach(), LearnableRates::uniform(init.layer_count(), config.inner_steps, config.alpha_init), {}};
  if (config.epochs == 0) return result;

  const WeightSchedule schedule = weight_matrix(config.epochs, config.inner_steps, config.gamma, config.freeze_first_step_weight);
  const std::vector<double> final_only = final_step_weights(config.inner_steps);
  std::vector<double> theta = result.theta0.flatten();
  std::vector<double> rates = flat_rates(result.rates);
  Adam adam_theta(theta.size()), adam_rates(rates.size());

  for (std::size_t e = 1; e <= config.epochs; ++e) {
    const auto weights = config.mode == Mode::vanilla_maml ? std::span<const double>(final_only) : schedule.row(e);
    const bool second_order = e > config.first_order_epochs;
    const double beta = epoch_beta(config, e);

    MetaGradient mg;
    try {
      mg = meta_gradient(result.theta0, result.rates, tasks, weights, second_order, config.execution);
    } catch (const DomainError& ex) {
      throw DomainError("meta_train: epoch " + std::to_string(e) + ", " + ex.what());
    }
    double sq = 0.0;
    for (double g : mg.theta) sq += g * g;
    for (double g : mg.rates) sq += g * g;
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm) || !std::isfinite(mg.loss)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "norm %g, loss %g", norm, mg.loss);
      throw DomainError("meta_train: epoch " + std::to_string(e) + ": non-finite meta-gradient (" + buf + ")");
    }

    if (config.optimizer == OuterOptimizer::adam) {
      adam_theta.step(theta, mg.theta, beta);
      if (config.learn_rates) adam_rates.step(rates, mg.rates, beta);
    } else {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= beta * mg.theta[i];
      if (config.learn_rates) {
        for (std::size_t i = 0; i < rates.size(); ++i) rates[i] -= beta * mg.rates[i];
      }
    }
    result.theta0 = result.theta0.unflatten(theta);
    std::vector<Tensor> rt;
    for (double a : rates) rt.push_back(Tensor::scalar(a));
    result.rates = result.rates.with_values(std::move(rt));

    result.history.push_back({e, mg.loss, beta, second_order});
    if (on_epoch) on_epoch(result.history.back());
  }
  return result;
}

model::Checkpoint meta_train(const MetaTrainConfig& config, const model::ArchConfig& arch,
                             std::span<const data::Task> train_tasks, const EpochCallback& on_epoch) {
  arch.validate();
  std::vector<TaskObjective> objectives;
  objectives.reserve(train_tasks.size());
  for (const auto& t : train_tasks) objectives.push_back(lstm_objective(t));
  MetaTrainResult r = meta_train(config, model::init_params(arch, config.seed), objectives, on_epoch);
  model::Checkpoint ck;
  ck.arch = arch;
  ck.params = std::move(r.theta0);
  ck.learned_rates = r.rates.matrix();
  ck.config = to_json(config);
  ck.history = std::move(r.history);
  return ck;
}

metrics::TaskMetrics evaluate_query(const ParamSet& params, const data::Task& task, const std::string& model) {
  const model::Batch q = task.query_batch();
  const Tensor pred = model::forward_batch(params, q.inputs);
  return metrics::evaluate(task.id, model, task.query_month(), pred.data(), q.targets.data());
}

metrics::TaskMetrics adapt_and_eval(const model::Checkpoint& checkpoint, const data::Task& task, std::size_t steps,
                                    const std::string& model, double fallback_alpha) {
  const ParamSet theta0 = checkpoint.params.detach();
  if (steps == 0) return evaluate_query(theta0, task, model);
  const LearnableRates rates = checkpoint.learned_rates
                                   ? LearnableRates::from_matrix(*checkpoint.learned_rates)
                                   : LearnableRates::uniform(theta0.layer_count(), steps, fallback_alpha);
  const auto support = lstm_objective(task).support;
  return evaluate_query(inner_adapt(theta0, rates, support, steps, false).back(), task, model);
}

}  // namespace metaload::meta
