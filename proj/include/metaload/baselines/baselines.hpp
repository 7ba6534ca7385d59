#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "json.hpp"
#include "metaload/data/task.hpp"
#include "metaload/metrics/metrics.hpp"
#include "metaload/model/checkpoint.hpp"

namespace metaload::baselines {

struct BaselineConfig {
  model::ArchConfig arch;
  std::size_t train_epochs = 1;      // TS full-batch steps on the support set
  std::size_t finetune_epochs = 1;   // TI steps on the support set
  std::size_t pretrain_epochs = 150; // TI passes over the pooled meta-train samples
  double lr = 0.01;
  double pretrain_lr = 0.01;
  double finetune_lr = 0.0;          // TI fine-tuning, 0: lr
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the field.
  void validate() const;
};

nlohmann::json to_json(const BaselineConfig& config);

/// Fresh init_params(arch, seed), train_epochs full-batch steps at lr on the
/// support set, then query metrics. Shares inner_adapt with the meta-learner.
metrics::TaskMetrics train_ts(const data::Task& task, const BaselineConfig& config);

/// Pools every support and query sample of the meta-train tasks and runs
/// pretrain_epochs of mini-batch gradient descent, reshuffling each epoch
/// from the seed. Throws DataError when the pool is empty.
model::Checkpoint pretrain_ti(std::span<const data::Task> meta_train, const BaselineConfig& config);

/// finetune_epochs full-batch steps at finetune_lr (lr when 0) from the
/// pretrained weights, then query metrics.
metrics::TaskMetrics finetune_eval_ti(const model::Checkpoint& checkpoint, const data::Task& task,
                                      const BaselineConfig& config);

}  // namespace metaload::baselines
