#include "metaload/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "metaload/error.hpp"

namespace metaload::harness {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError(key + ": invalid value '" + value + "' (expected " + expected + ")");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    bad(key, v, "a non-negative integer");
  }
  if (used != v.size()) bad(key, v, "a non-negative integer");
  return x;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    bad(key, v, "a number");
  }
  if (used != v.size() || !std::isfinite(x)) bad(key, v, "a finite number");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(to_size(key, item));
  return out;
}

std::chrono::year_month to_month(const std::string& key, const std::string& v) {
  int y = 0;
  unsigned m = 0;
  char dash = 0;
  std::istringstream in(v);
  if (!(in >> y >> dash >> m) || dash != '-' || !in.eof() || m < 1 || m > 12) bad(key, v, "YYYY-MM");
  return std::chrono::year{y} / std::chrono::month{m};
}

SweepAxis to_axis(const std::string& key, const std::string& v) {
  for (auto a : {SweepAxis::second_order_epochs, SweepAxis::linear_layers, SweepAxis::inner_steps, SweepAxis::hidden_size,
                 SweepAxis::support_months}) {
    if (axis_name(a) == v) return a;
  }
  bad(key, v, "second_order_epochs, linear_layers, inner_steps, hidden_size or support_months");
}

}  // namespace

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::second_order_epochs: return "second_order_epochs";
    case SweepAxis::linear_layers: return "linear_layers";
    case SweepAxis::inner_steps: return "inner_steps";
    case SweepAxis::hidden_size: return "hidden_size";
    case SweepAxis::support_months: return "support_months";
  }
  return "?";
}

void set_option(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto& s = c.data.synth;
  auto& m = c.meta;
  auto& b = c.baseline;
  if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "output_dir") c.output_dir = v;
  else if (key == "models") c.models = split_list(v);
  else if (key == "data.source") {
    if (v == "synth") c.data.source = DataSource::synth;
    else if (v == "manifest") c.data.source = DataSource::manifest;
    else bad(key, v, "synth or manifest");
  }
  else if (key == "data.manifest") c.data.manifest = v;
  else if (key == "data.seed") c.data.seed = to_u64(key, v);
  else if (key == "data.resolution_minutes") s.resolution = std::chrono::minutes{to_size(key, v)};
  else if (key == "data.support_stride_days") c.data.window.support_stride_days = to_size(key, v);
  else if (key == "data.n_consumers") s.n_consumers = to_size(key, v);
  else if (key == "data.train_tasks") s.train_tasks = to_size(key, v);
  else if (key == "data.train_min_months") s.train_min_months = to_size(key, v);
  else if (key == "data.train_max_months") s.train_max_months = to_size(key, v);
  else if (key == "data.test_per_length") s.test_per_length = to_size(key, v);
  else if (key == "data.test_months") s.test_months = to_sizes(key, v);
  else if (key == "data.test_start_months") s.test_start_months = to_size(key, v);
  else if (key == "data.test_series_months") s.test_series_months = to_size(key, v);
  else if (key == "data.test_support_months") s.test_support_months = to_size(key, v);
  else if (key == "data.first_month") s.first_month = to_month(key, v);
  else if (key == "data.grid_months") s.grid_months = to_size(key, v);
  else if (key == "data.winter_peaking") s.winter_peaking = to_bool(key, v);
  else if (key == "arch.hidden_size") c.arch.hidden_size = to_size(key, v);
  else if (key == "arch.num_linear_layers") c.arch.num_linear_layers = to_size(key, v);
  else if (key == "meta.epochs") m.epochs = to_size(key, v);
  else if (key == "meta.inner_steps") m.inner_steps = to_size(key, v);
  else if (key == "meta.first_order_epochs") m.first_order_epochs = to_size(key, v);
  else if (key == "meta.gamma") m.gamma = to_double(key, v);
  else if (key == "meta.alpha_init") m.alpha_init = to_double(key, v);
  else if (key == "meta.beta_min") m.cosine.beta_min = to_double(key, v);
  else if (key == "meta.beta_max") m.cosine.beta_max = to_double(key, v);
  else if (key == "meta.cosine_max_epochs") m.cosine.max_epochs = to_size(key, v);
  else if (key == "meta.mode") {
    if (v == "maml_pp") m.mode = meta::Mode::maml_pp;
    else if (v == "vanilla_maml") m.mode = meta::Mode::vanilla_maml;
    else bad(key, v, "maml_pp or vanilla_maml");
  }
  else if (key == "meta.optimizer") {
    if (v == "sgd") m.optimizer = meta::OuterOptimizer::sgd;
    else if (v == "adam") m.optimizer = meta::OuterOptimizer::adam;
    else bad(key, v, "sgd or adam");
  }
  else if (key == "meta.learn_rates") m.learn_rates = to_bool(key, v);
  else if (key == "meta.freeze_first_step_weight") m.freeze_first_step_weight = to_bool(key, v);
  else if (key == "meta.execution" || key == "execution") {
    if (v == "parallel") m.execution = Execution::parallel;
    else if (v == "serial") m.execution = Execution::serial;
    else bad(key, v, "parallel or serial");
  }
  else if (key == "baseline.train_epochs") b.train_epochs = to_size(key, v);
  else if (key == "baseline.finetune_epochs") b.finetune_epochs = to_size(key, v);
  else if (key == "baseline.pretrain_epochs") b.pretrain_epochs = to_size(key, v);
  else if (key == "baseline.lr") b.lr = to_double(key, v);
  else if (key == "baseline.pretrain_lr") b.pretrain_lr = to_double(key, v);
  else if (key == "baseline.finetune_lr") b.finetune_lr = to_double(key, v);
  else if (key == "baseline.batch_size") b.batch_size = to_size(key, v);
  else if (key == "sweep.axis") {
    if (!c.sweep) c.sweep.emplace();
    c.sweep->axis = to_axis(key, v);
  }
  else if (key == "sweep.values") {
    if (!c.sweep) c.sweep.emplace();
    c.sweep->values = to_sizes(key, v);
  }
  else throw ConfigError(key + ": unknown key");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    }
    set_option(c, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void ExperimentConfig::finalize() {
  const auto res = data.synth.resolution;
  if (res.count() <= 0 || 1440 % res.count() != 0) {
    throw ConfigError("data.resolution_minutes: must divide a day");
  }
  const std::size_t spd = static_cast<std::size_t>(1440 / res.count());
  arch.input_len = data.window.input_days * spd;
  arch.output_len = spd;
  arch.validate();
  data.synth.seed = data.seed;
  if (data.source == DataSource::synth) data.synth.validate();
  if (data.source == DataSource::manifest && data.manifest.empty()) {
    throw ConfigError("data.manifest: required when data.source = manifest");
  }
  if (data.window.support_stride_days == 0) throw ConfigError("data.support_stride_days: must be positive");
  meta.seed = seed;
  meta.validate();
  baseline.seed = seed;
  baseline.arch = arch;
  baseline.validate();
  if (models.empty()) throw ConfigError("models: at least one model is required");
  for (const auto& name : models) {
    if (name != "proposed" && name != "ti_lstm" && name != "ts_lstm") {
      throw ConfigError("models: unknown model '" + name + "' (expected proposed, ti_lstm, ts_lstm)");
    }
  }
  if (sweep && sweep->values.size() < 2) throw ConfigError("sweep.values: at least two values are required");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& s = c.data.synth;
  nlohmann::json data{{"source", c.data.source == DataSource::synth ? "synth" : "manifest"},
                      {"seed", c.data.seed},
                      {"resolution_minutes", s.resolution.count()},
                      {"support_stride_days", c.data.window.support_stride_days}};
  if (c.data.source == DataSource::manifest) {
    data["manifest"] = c.data.manifest.generic_string();
  } else {
    const auto ym = s.first_month;
    data["synth"] = {{"n_consumers", s.n_consumers},
                     {"train_tasks", s.train_tasks},
                     {"train_min_months", s.train_min_months},
                     {"train_max_months", s.train_max_months},
                     {"test_per_length", s.test_per_length},
                     {"test_months", s.test_months},
                     {"test_start_months", s.test_start_months},
                     {"test_series_months", s.test_series_months},
                     {"test_support_months", s.test_support_months},
                     {"first_month", std::to_string(static_cast<int>(ym.year())) + "-" +
                                         std::to_string(static_cast<unsigned>(ym.month()))},
                     {"grid_months", s.grid_months},
                     {"winter_peaking", s.winter_peaking}};
  }
  nlohmann::json out{{"seed", c.seed},
                     {"models", c.models},
                     {"data", data},
                     {"arch",
                      {{"hidden_size", c.arch.hidden_size},
                       {"input_len", c.arch.input_len},
                       {"output_len", c.arch.output_len},
                       {"num_linear_layers", c.arch.num_linear_layers}}},
                     {"meta", meta::to_json(c.meta)},
                     {"baseline", baselines::to_json(c.baseline)}};
  if (c.sweep) out["sweep"] = {{"axis", axis_name(c.sweep->axis)}, {"values", c.sweep->values}};
  return out;
}

}  // namespace metaload::harness
