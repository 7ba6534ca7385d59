#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "metaload/autodiff/tensor.hpp"

namespace metaload::ad {

enum class OpKind : std::uint8_t {
  leaf,      // differentiable input
  constant,  // untracked operand captured by a recorded op
  add,
  sub,
  mul,         // elementwise
  scalar_mul,  // tensor times a fixed double
  scale,       // tensor times a one-element tensor
  matvec,
  matmul,
  transpose,
  reshape,
  add_bias,        // [m,n] + [m] broadcast over columns
  sum_cols,        // [m,n] -> [m]
  broadcast_cols,  // [m] -> [m,n]
  sigmoid,
  tanh,
  square,
  sum,
  mean,
  expand,  // one element -> any shape
  concat_rows,
  slice_rows,
  pad_rows,  // inverse of slice_rows: zero rows around the input
};

std::string_view op_name(OpKind kind);

struct OpAttrs {
  double scalar = 0.0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t extent = 0;
  bool trans_a = false;
  bool trans_b = false;
  Shape shape;
};

struct Node {
  OpKind op = OpKind::leaf;
  std::uint8_t arity = 0;
  std::array<NodeId, 2> inputs{};
  OpAttrs attrs;
  Tensor value;  // untracked view of the node's output
};

/// Append-only tape. Node inputs always precede the node, so the tape is
/// acyclic by construction and a reverse index sweep is a valid reverse
/// topological order.
///
/// A Graph is confined to one thread. Tensors keep a raw pointer to their
/// graph, which therefore must outlive them and cannot be moved.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Registers a copy of `value` as a differentiable input.
  Tensor leaf(const Tensor& value);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_[id]; }

  /// Tracked tensor referring to an existing node.
  Tensor handle(NodeId id);

  /// Appends an op node. Untracked inputs are captured as constant nodes.
  Tensor record(OpKind op, std::span<const Tensor* const> inputs, OpAttrs attrs, Tensor value);

 private:
  NodeId push(Node node);
  NodeId constant(const Tensor& value);

  std::vector<Node> nodes_;
};

}  // namespace metaload::ad
