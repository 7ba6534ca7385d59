#include "doctest.h"
#include "metaload/autodiff/finite_diff.hpp"
#include "metaload/baselines/baselines.hpp"
#include "metaload/data/synth.hpp"
#include "metaload/error.hpp"
#include "metaload/meta/maml.hpp"

using namespace metaload;
using namespace metaload::baselines;

namespace {

const data::MetaDataset& small_dataset() {
  static const data::MetaDataset ds = [] {
    data::SynthConfig c;
    c.n_consumers = 5;
    c.train_tasks = 4;
    c.train_min_months = 1;
    c.train_max_months = 2;
    c.test_months = {1};
    c.test_per_length = 1;
    c.test_start_months = 3;
    c.resolution = std::chrono::minutes{240};
    return data::synth_meta_dataset(c);
  }();
  return ds;
}

BaselineConfig small_config() {
  BaselineConfig c;
  c.arch = {4, 42, 6, 1};
  c.pretrain_epochs = 3;
  c.batch_size = 8;
  return c;
}

}  // namespace

TEST_CASE("train_ts matches inner_adapt from the same init") {
  const auto& task = small_dataset().test_tasks[0];
  BaselineConfig cfg = small_config();
  cfg.train_epochs = 3;
  const auto ts = train_ts(task, cfg);
  const auto init = model::init_params(cfg.arch, cfg.seed);
  const auto it = meta::inner_adapt(init, meta::LearnableRates::uniform(2, 3, cfg.lr), meta::lstm_objective(task).support,
                                    3, false);
  CHECK(meta::evaluate_query(it.back(), task, "x").mse == ts.mse);
  CHECK(train_ts(task, cfg).mse == ts.mse);

  cfg.train_epochs = 0;
  CHECK(train_ts(task, cfg).mse == meta::evaluate_query(init, task, "x").mse);
  CHECK(ts.model == "ts_lstm");
}

TEST_CASE("pretrain_ti is deterministic and beats random init") {
  const auto& ds = small_dataset();
  BaselineConfig cfg = small_config();
  cfg.pretrain_epochs = 30;
  const auto a = pretrain_ti(ds.train_tasks, cfg);
  const auto b = pretrain_ti(ds.train_tasks, cfg);
  CHECK(a.params.flatten() == b.params.flatten());
  CHECK(a.history.back().meta_loss < a.history.front().meta_loss);

  cfg.finetune_epochs = 0;
  double pre = 0.0, rnd = 0.0;
  for (const auto& t : ds.test_tasks) {
    pre += finetune_eval_ti(a, t, cfg).mse;
    rnd += meta::evaluate_query(model::init_params(cfg.arch, cfg.seed), t, "x").mse;
  }
  CHECK(pre < rnd);
  CHECK_THROWS_AS(pretrain_ti(std::span<const data::Task>{}, cfg), DataError);
}

TEST_CASE("TI fine-tuning leaves the checkpoint untouched and lowers support loss") {
  const auto& ds = small_dataset();
  BaselineConfig cfg = small_config();
  const auto ck = pretrain_ti(ds.train_tasks, cfg);
  const auto before = ck.params.flatten();
  const auto& a = ds.test_tasks[0];
  const auto& b = ds.test_tasks[1];
  const double b_alone = finetune_eval_ti(ck, b, cfg).mse;
  finetune_eval_ti(ck, a, cfg);
  CHECK(finetune_eval_ti(ck, b, cfg).mse == b_alone);
  CHECK(ck.params.flatten() == before);

  const auto support = meta::lstm_objective(a).support;
  const auto tuned = meta::inner_adapt(ck.params, meta::LearnableRates::uniform(2, 1, 1e-3), support, 1, false);
  CHECK(support(tuned[0]).item() <= support(ck.params).item());

  BaselineConfig other = cfg;
  other.arch.hidden_size = 5;
  CHECK_THROWS_AS(finetune_eval_ti(ck, a, other), ShapeError);
}

TEST_CASE("finetune_lr overrides lr for TI only") {
  const auto& ds = small_dataset();
  BaselineConfig cfg = small_config();
  const auto ck = pretrain_ti(ds.train_tasks, cfg);
  const auto& t = ds.test_tasks[0];
  BaselineConfig split = cfg;
  split.lr = 0.5;
  split.finetune_lr = cfg.lr;
  CHECK(finetune_eval_ti(ck, t, split).mse == finetune_eval_ti(ck, t, cfg).mse);
  CHECK(train_ts(t, split).mse != train_ts(t, cfg).mse);
  split.finetune_lr = 0.5;
  CHECK(finetune_eval_ti(ck, t, split).mse != finetune_eval_ti(ck, t, cfg).mse);
  split.finetune_lr = -1.0;
  CHECK_THROWS_AS(finetune_eval_ti(ck, t, split), ConfigError);
}

TEST_CASE("single-task pool equals full-batch training on that pool") {
  const auto& task = small_dataset().train_tasks[0];
  BaselineConfig cfg = small_config();
  cfg.pretrain_epochs = 2;
  cfg.batch_size = 1000;
  const auto ck = pretrain_ti(std::span(&task, 1), cfg);

  data::Task pooled = task;
  pooled.support.insert(pooled.support.end(), task.query.begin(), task.query.end());
  auto init = model::init_params(cfg.arch, cfg.seed);
  const auto it = meta::inner_adapt(init, meta::LearnableRates::uniform(2, 2, cfg.pretrain_lr),
                                    meta::lstm_objective(pooled).support, 2, false);
  CHECK(ad::relative_error(it.back().flatten(), ck.params.flatten()) < 1e-12);
}
