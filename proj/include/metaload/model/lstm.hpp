#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "metaload/autodiff/param_set.hpp"
#include "metaload/autodiff/tensor.hpp"

namespace metaload::model {

using ad::ParamSet;
using ad::Tensor;

struct ArchConfig {
  std::size_t hidden_size = 32;
  std::size_t input_len = 672;  // one week of 15-minute readings
  std::size_t output_len = 96;  // the following day
  std::size_t num_linear_layers = 1;

  /// Throws ConfigError on H < 1, empty windows or a layer count outside {1,2,3}.
  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

/// Samples packed column-wise: inputs [input_len, B], targets [output_len, B].
struct Batch {
  Tensor inputs;
  Tensor targets;

  std::size_t size() const { return inputs.shape().cols(); }
};

/// Packs (x, y) pairs into a Batch. Throws DataError when empty or ragged.
Batch make_batch(std::span<const std::vector<double>> xs, std::span<const std::vector<double>> ys);

/// Layers: "lstm" {W_ih [4H,1], W_hh [4H,H], b [4H]}, "head_1" {W [T_O,H], b [T_O]},
/// and for deeper heads "head_2", "head_3" {W [T_O,T_O], b [T_O]}.
/// Gate blocks within 4H are packed input, forget, cell, output.
///
/// Weights are uniform in [-1/sqrt(H), 1/sqrt(H)], biases zero.
ParamSet init_params(const ArchConfig& config, std::uint64_t seed);

/// 4H(1+H+1) + (T_O H + T_O) + extra_layers (T_O^2 + T_O)
std::size_t parameter_count(const ArchConfig& config);

/// LSTM over the input rows (one scalar per step, zero initial state), then the
/// linear head(s) on the final hidden state. inputs [T_I, B] -> [T_O, B].
Tensor forward_batch(const ParamSet& params, const Tensor& inputs);

/// Single-sample convenience: x of length T_I -> forecast [T_O]. Throws
/// ShapeError on a length mismatch or parameters of another architecture.
Tensor forward(const ArchConfig& config, const ParamSet& params, std::span<const double> x);

/// Mean over samples and output positions of the squared error.
Tensor mse_loss(const ParamSet& params, const Batch& batch);

/// Hidden size and window lengths implied by a ParamSet's shapes.
ArchConfig infer_arch(const ParamSet& params);

}  // namespace metaload::model
