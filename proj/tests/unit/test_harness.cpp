#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "metaload/error.hpp"
#include "metaload/harness/config.hpp"
#include "metaload/harness/run.hpp"

using namespace metaload;
using namespace metaload::harness;
namespace fs = std::filesystem;

namespace {

const char* kSmoke = R"(# tiny
seed = 3
data.resolution_minutes = 240
data.n_consumers = 4
data.train_tasks = 2
data.test_months = 1
data.test_per_length = 1
data.test_start_months = 2
arch.hidden_size = 3
meta.epochs = 2
meta.first_order_epochs = 1
baseline.pretrain_epochs = 1
)";

ExperimentConfig smoke(const fs::path& out) {
  ExperimentConfig c = parse_config(kSmoke);
  c.output_dir = out;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("metaload_h_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Independent type-7 quantile: position (n-1)p split into integer/fraction with modf.
double reference_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  double whole = 0.0;
  const double frac = std::modf(p * static_cast<double>(v.size() - 1), &whole);
  const auto i = static_cast<std::size_t>(whole);
  return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v[i];
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config("seed = 9  # trailing\n\n meta.inner_steps=3\ndata.test_months = 1, 2\nmodels = ts_lstm\n"
                              "meta.mode = vanilla_maml\ndata.first_month = 2021-02\nsweep.axis = hidden_size\n"
                              "sweep.values = 8,16\nbaseline.finetune_lr = 0.25\n");
  CHECK(c.seed == 9);
  CHECK(c.meta.inner_steps == 3);
  CHECK(c.data.synth.test_months == std::vector<std::size_t>{1, 2});
  CHECK(c.models == std::vector<std::string>{"ts_lstm"});
  CHECK(c.meta.mode == meta::Mode::vanilla_maml);
  CHECK(c.data.synth.first_month == std::chrono::year{2021} / std::chrono::February);
  REQUIRE(c.sweep);
  CHECK(c.sweep->values == std::vector<std::size_t>{8, 16});
  CHECK(c.baseline.finetune_lr == 0.25);

  CHECK_THROWS_WITH_AS(parse_config("meta.epochz = 3"), doctest::Contains("meta.epochz: unknown key"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("meta.gamma = lots"), doctest::Contains("meta.gamma"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("arch.hidden_size = -4"), doctest::Contains("arch.hidden_size"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("no equals sign"), doctest::Contains("line 1"), ConfigError);

  auto bad = parse_config("meta.epochs = 10\nmeta.first_order_epochs = 20");
  CHECK_THROWS_WITH_AS(bad.finalize(), doctest::Contains("meta.first_order_epochs"), ConfigError);
  auto layers = parse_config("arch.num_linear_layers = 4");
  CHECK_THROWS_WITH_AS(layers.finalize(), doctest::Contains("arch.num_linear_layers"), ConfigError);
  auto models = parse_config("models = proposed, lstm");
  CHECK_THROWS_WITH_AS(models.finalize(), doctest::Contains("models"), ConfigError);
}

TEST_CASE("finalize derives windows and seeds") {
  auto c = parse_config("data.resolution_minutes = 60\nseed = 4");
  c.finalize();
  CHECK(c.arch.input_len == 168);
  CHECK(c.arch.output_len == 24);
  CHECK(c.meta.seed == 4);
  CHECK(c.baseline.seed == 4);
  CHECK(c.baseline.arch == c.arch);
  auto d = ExperimentConfig{};
  d.finalize();
  CHECK(d.arch.input_len == 672);
  CHECK(d.arch.output_len == 96);
}

TEST_CASE("config hash ignores the output directory") {
  auto a = smoke("x");
  auto b = smoke("y");
  a.finalize();
  b.finalize();
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 4;
  b.finalize();
  CHECK(config_hash(a) != config_hash(b));
  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("quantile matches an independent computation") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n : {1, 2, 5, 10, 33}) {
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) CHECK(quantile(s, p) == doctest::Approx(reference_quantile(v, p)));
  }
  CHECK(quantile(std::vector<double>{1, 2, 3, 4}, 0.5) == 2.5);
}

TEST_CASE("smoke run is deterministic and reportable") {
  const fs::path a = fresh_dir("run_a"), b = fresh_dir("run_b"), rep = fresh_dir("report");
  const auto art = run(smoke(a));
  CHECK(art.models.size() == 3);
  CHECK(art.at("proposed").tasks.size() == 2);
  for (const char* f : {"metrics_per_task.csv", "aggregate.json", "run_meta.json", "checkpoint.json", "ti_checkpoint.json"}) {
    CHECK(fs::exists(a / f));
  }
  run(smoke(b));
  CHECK(slurp(a / "metrics_per_task.csv") == slurp(b / "metrics_per_task.csv"));
  CHECK(slurp(a / "metrics_per_task.csv").rfind("# config_hash=" + art.config_hash, 0) == 0);

  const std::vector<fs::path> dirs{a};
  report(dirs, rep);
  std::ifstream box(rep / "boxplot_data.csv");
  std::string line;
  std::getline(box, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(box, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    rows.push_back(f);
  }
  CHECK(rows.size() == 9);  // three metrics per model
  std::ifstream csv(a / "metrics_per_task.csv");
  const auto tasks = metrics::read_task_csv(csv);
  for (const auto& r : rows) {
    if (r[1] != "ts_lstm" || r[2] != "mse") continue;
    std::vector<double> v;
    for (const auto& t : tasks) {
      if (t.model == "ts_lstm") v.push_back(t.mse);
    }
    CHECK(std::stod(r[4]) == doctest::Approx(reference_quantile(v, 0.25)));
    CHECK(std::stod(r[5]) == doctest::Approx(reference_quantile(v, 0.5)));
  }
  CHECK(fs::exists(rep / "summary.md"));

  const fs::path empty = fresh_dir("empty");
  fs::create_directories(empty);
  const std::vector<fs::path> none{empty};
  CHECK_THROWS_WITH_AS(report(none, rep), doctest::Contains("missing artifact"), DataError);

  const fs::path other = fresh_dir("run_other");
  auto c = smoke(other);
  c.data.seed = 8;
  run(c);
  const std::vector<fs::path> mixed{a, other};
  CHECK_THROWS_WITH_AS(report(mixed, rep), doctest::Contains("refusing to merge"), DataError);
  for (const auto& d : {a, b, rep, empty, other}) fs::remove_all(d);
}

TEST_CASE("run errors name the stage") {
  auto c = smoke(fresh_dir("bad_stage"));
  c.data.synth.train_tasks = 0;
  CHECK_THROWS_WITH_AS(run(c), doctest::Contains("stage 'meta-train'"), RunError);
  fs::remove_all(c.output_dir);
}

TEST_CASE("sweep cells, training reuse and failed cells") {
  const fs::path out = fresh_dir("sweep");
  auto c = smoke(out);
  c.sweep = SweepConfig{SweepAxis::support_months, {1, 2}};
  std::vector<std::string> log;
  RunOptions opts;
  opts.log = [&](const std::string& m) { log.push_back(m); };
  const auto res = sweep(c, opts);
  REQUIRE(res.cells.size() == 2);
  CHECK(res.cells[0].status == "ok");
  CHECK(res.cells[1].status == "ok");
  CHECK(std::count_if(log.begin(), log.end(), [](const std::string& m) { return m.find("reusing") != std::string::npos; }) == 2);
  // same query windows, different support lengths
  CHECK(res.cells[0].artifacts->at("ts_lstm").tasks[0].query_month == res.cells[1].artifacts->at("ts_lstm").tasks[0].query_month);
  CHECK(fs::exists(out / "sweep_table.csv"));
  CHECK(fs::exists(out / "support_months_2" / "metrics_per_task.csv"));

  auto h = smoke(out / "hidden");
  h.sweep = SweepConfig{SweepAxis::hidden_size, {0, 2}};
  const auto hr = sweep(h);
  CHECK(hr.cells[0].status.find("arch.hidden_size") != std::string::npos);
  CHECK(hr.cells[1].status == "ok");
  CHECK(slurp(out / "hidden" / "sweep_table.csv").find("failed: ") != std::string::npos);

  const fs::path rep = out / "report";
  const std::vector<fs::path> dirs{out};
  report(dirs, rep);
  CHECK(fs::exists(rep / "sweep_lines.csv"));

  const auto so = sweep_cell_config(smoke(out), SweepAxis::second_order_epochs, 2);
  CHECK(so.meta.first_order_epochs == 0);
  CHECK_THROWS_AS(sweep_cell_config(smoke(out), SweepAxis::second_order_epochs, 3), ConfigError);
  fs::remove_all(out);
}
