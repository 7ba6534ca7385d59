#include "metaload/model/lstm.hpp"

#include <cmath>
#include <random>
#include <string>

#include "metaload/autodiff/ops.hpp"
#include "metaload/error.hpp"

namespace metaload::model {

using namespace metaload::ad;

void ArchConfig::validate() const {
  if (hidden_size < 1) throw ConfigError("arch.hidden_size: must be >= 1");
  if (input_len < 1) throw ConfigError("arch.input_len: must be >= 1");
  if (output_len < 1) throw ConfigError("arch.output_len: must be >= 1");
  if (num_linear_layers < 1 || num_linear_layers > 3) throw ConfigError("arch.num_linear_layers: must be 1, 2 or 3");
}

Batch make_batch(std::span<const std::vector<double>> xs, std::span<const std::vector<double>> ys) {
  if (xs.empty()) throw DataError("batch: no samples");
  if (xs.size() != ys.size()) throw DataError("batch: input/target count mismatch");
  const std::size_t b = xs.size();
  const std::size_t ti = xs[0].size(), to = ys[0].size();
  std::vector<double> in(ti * b), out(to * b);
  for (std::size_t j = 0; j < b; ++j) {
    if (xs[j].size() != ti || ys[j].size() != to) throw DataError("batch: samples have different lengths");
    for (std::size_t t = 0; t < ti; ++t) in[t * b + j] = xs[j][t];
    for (std::size_t t = 0; t < to; ++t) out[t * b + j] = ys[j][t];
  }
  return {Tensor::matrix(ti, b, std::move(in)), Tensor::matrix(to, b, std::move(out))};
}

ParamSet init_params(const ArchConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t h = config.hidden_size, to = config.output_len;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto uniform = [&](std::size_t rows, std::size_t cols) {
    std::vector<double> v(rows * cols);
    for (double& x : v) x = dist(rng);
    return Tensor::matrix(rows, cols, std::move(v));
  };

  ParamSet p;
  p.add("lstm", "W_ih", uniform(4 * h, 1));
  p.add("lstm", "W_hh", uniform(4 * h, h));
  p.add("lstm", "b", Tensor::zeros(Shape{4 * h}));
  p.add("head_1", "W", uniform(to, h));
  p.add("head_1", "b", Tensor::zeros(Shape{to}));
  for (std::size_t k = 2; k <= config.num_linear_layers; ++k) {
    const std::string layer = "head_" + std::to_string(k);
    p.add(layer, "W", uniform(to, to));
    p.add(layer, "b", Tensor::zeros(Shape{to}));
  }
  return p;
}

std::size_t parameter_count(const ArchConfig& c) {
  const std::size_t h = c.hidden_size, to = c.output_len;
  return 4 * h * (1 + h + 1) + (to * h + to) + (c.num_linear_layers - 1) * (to * to + to);
}

ArchConfig infer_arch(const ParamSet& params) {
  ArchConfig c;
  const Tensor& w_hh = params.get("lstm", "W_hh");
  c.hidden_size = w_hh.shape()[1];
  c.output_len = params.get("head_1", "W").shape()[0];
  c.num_linear_layers = params.layer_count() - 1;
  c.input_len = 0;  // not encoded in the weights
  return c;
}

Tensor forward_batch(const ParamSet& params, const Tensor& inputs) {
  const Tensor& w_ih = params.get("lstm", "W_ih");
  const Tensor& w_hh = params.get("lstm", "W_hh");
  const Tensor& b = params.get("lstm", "b");
  const std::size_t h = w_hh.shape()[1];
  if (inputs.shape().rank() != 2) throw ShapeError("forward: inputs must be [T_I, B], got " + inputs.shape().str());
  const std::size_t steps = inputs.shape()[0];

  Tensor hidden, cell;
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor x_t = slice_rows(inputs, t, t + 1);  // [1, B]
    Tensor z = matmul(w_ih, x_t);
    // Zero initial state: the recurrent terms vanish at t = 0.
    if (t > 0) z = add(z, matmul(w_hh, hidden));
    z = add_bias(z, b);
    const Tensor in_gate = sigmoid(slice_rows(z, 0, h));
    const Tensor cand = tanh(slice_rows(z, 2 * h, 3 * h));
    const Tensor out_gate = sigmoid(slice_rows(z, 3 * h, 4 * h));
    if (t == 0) {
      cell = mul(in_gate, cand);
    } else {
      const Tensor forget = sigmoid(slice_rows(z, h, 2 * h));
      cell = add(mul(forget, cell), mul(in_gate, cand));
    }
    hidden = mul(out_gate, tanh(cell));
  }
  if (steps == 0) hidden = Tensor::zeros(Shape{h, inputs.shape()[1]});

  Tensor out = add_bias(matmul(params.get("head_1", "W"), hidden), params.get("head_1", "b"));
  for (std::size_t k = 2; k < params.layer_count(); ++k) {
    const std::string layer = "head_" + std::to_string(k);
    out = add_bias(matmul(params.get(layer, "W"), out), params.get(layer, "b"));
  }
  return out;
}

Tensor forward(const ArchConfig& config, const ParamSet& params, std::span<const double> x) {
  if (x.size() != config.input_len) {
    throw ShapeError("forward: input length " + std::to_string(x.size()) + " != T_I " + std::to_string(config.input_len));
  }
  if (!params.congruent(init_params(config, 0))) throw ShapeError("forward: parameters do not match the architecture");
  const Tensor in = Tensor::matrix(x.size(), 1, std::vector<double>(x.begin(), x.end()));
  const Tensor out = forward_batch(params, in);
  return reshape(out, Shape{out.shape()[0]});
}

Tensor mse_loss(const ParamSet& params, const Batch& batch) {
  if (batch.size() == 0) throw DataError("mse_loss: empty batch");
  const Tensor pred = forward_batch(params, batch.inputs);
  if (!(pred.shape() == batch.targets.shape())) {
    throw ShapeError("mse_loss: forecast " + pred.shape().str() + " vs target " + batch.targets.shape().str());
  }
  return mean(square(sub(pred, batch.targets)));
}

}  // namespace metaload::model
