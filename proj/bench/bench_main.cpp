#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "metaload/data/synth.hpp"
#include "metaload/kernels/dense.hpp"
#include "metaload/meta/maml.hpp"
#include "metaload/meta/schedule.hpp"
#include "metaload/model/lstm.hpp"

using namespace metaload;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

template <auto Gemm>
void BM_gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto a = random_vec(m * k, 1), b = random_vec(k * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    Gemm(kernels::GemmShape{m, n, k, false, false}, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * n * k));
}

// LSTM gate product (4H x H times H x B) and two square sizes
void gemm_args(benchmark::internal::Benchmark* b) {
  b->Args({128, 32, 32})->Args({128, 20, 32})->Args({256, 256, 256})->Args({512, 512, 512});
}

struct EpochFixture {
  model::ArchConfig arch{16, 168, 24, 1};
  std::vector<data::Task> tasks;
  std::vector<meta::TaskObjective> objectives;
  ad::ParamSet theta;
  meta::LearnableRates rates = meta::LearnableRates::uniform(2, 1, 0.01);

  EpochFixture() {
    data::SynthConfig cfg;
    cfg.resolution = std::chrono::minutes{60};
    cfg.n_consumers = 10;
    cfg.train_tasks = 16;
    cfg.test_per_length = 1;
    cfg.test_months = {1};
    const auto ds = data::synth_meta_dataset(cfg);
    tasks = ds.train_tasks;
    for (const auto& t : tasks) objectives.push_back(meta::lstm_objective(t));
    theta = model::init_params(arch, 1);
  }
};

const EpochFixture& fixture() {
  static const EpochFixture f;
  return f;
}

void BM_meta_gradient(benchmark::State& state) {
  const auto& f = fixture();
  const bool second_order = state.range(0) != 0;
  const auto execution = state.range(1) != 0 ? Execution::parallel : Execution::serial;
  const std::vector<double> weights{1.0};
  for (auto _ : state) {
    auto g = meta::meta_gradient(f.theta, f.rates, f.objectives, weights, second_order, execution);
    benchmark::DoNotOptimize(g.loss);
  }
  state.SetLabel(std::string(second_order ? "second-order" : "first-order") + "/" +
                 (execution == Execution::parallel ? "parallel" : "serial") + " threads=" +
                 std::to_string(kernels::max_threads()));
}

}  // namespace

BENCHMARK(BM_gemm<kernels::serial::gemm>)->Name("gemm/serial")->Apply(gemm_args);
BENCHMARK(BM_gemm<kernels::parallel::gemm>)->Name("gemm/parallel")->Apply(gemm_args);
BENCHMARK(BM_meta_gradient)->ArgsProduct({{0, 1}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
