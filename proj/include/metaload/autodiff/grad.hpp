#pragma once

#include <span>
#include <vector>

#include "metaload/autodiff/tensor.hpp"

namespace metaload::ad {

struct GradOptions {
  /// Record the backward pass so the returned gradients can be differentiated
  /// again. When false the gradients are constants, which is exactly the
  /// first-order approximation when they feed an inner-loop update.
  bool create_graph = false;
  /// Return zeros for inputs the loss does not depend on instead of throwing.
  bool allow_unused = false;
};

/// d loss / d wrt[i] by a reverse sweep over the loss's graph.
///
/// Throws GraphError when the loss is untracked or holds more than one element,
/// when a wrt tensor lives in another graph, or when a wrt tensor is
/// unreachable from the loss (unless allow_unused).
std::vector<Tensor> grad(const Tensor& loss, std::span<const Tensor> wrt, GradOptions options = {});

}  // namespace metaload::ad
