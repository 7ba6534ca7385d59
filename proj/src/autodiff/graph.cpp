#include "metaload/autodiff/graph.hpp"

#include <limits>

#include "metaload/error.hpp"

namespace metaload::ad {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::constant: return "constant";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul_elementwise";
    case OpKind::scalar_mul: return "scalar_mul";
    case OpKind::scale: return "scale";
    case OpKind::matvec: return "matvec";
    case OpKind::matmul: return "matmul";
    case OpKind::transpose: return "transpose";
    case OpKind::reshape: return "reshape";
    case OpKind::add_bias: return "add_bias";
    case OpKind::sum_cols: return "sum_cols";
    case OpKind::broadcast_cols: return "broadcast_cols";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::tanh: return "tanh";
    case OpKind::square: return "square";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::expand: return "expand";
    case OpKind::concat_rows: return "concat_rows";
    case OpKind::slice_rows: return "slice_rows";
    case OpKind::pad_rows: return "pad_rows";
  }
  return "unknown";
}

NodeId Graph::push(Node node) {
  if (nodes_.size() >= std::numeric_limits<NodeId>::max()) throw GraphError("graph node limit exceeded");
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::constant(const Tensor& value) {
  Node n;
  n.op = OpKind::constant;
  n.value = value.detach();
  return push(std::move(n));
}

Tensor Graph::leaf(const Tensor& value) {
  Node n;
  n.op = OpKind::leaf;
  n.value = value.detach();
  const NodeId id = push(std::move(n));
  return Tensor(value.shape(), value.buffer(), this, id);
}

Tensor Graph::handle(NodeId id) {
  const Tensor& v = nodes_.at(id).value;
  return Tensor(v.shape(), v.buffer(), this, id);
}

Tensor Graph::record(OpKind op, std::span<const Tensor* const> inputs, OpAttrs attrs, Tensor value) {
  Node n;
  n.op = op;
  n.arity = static_cast<std::uint8_t>(inputs.size());
  n.attrs = std::move(attrs);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor& in = *inputs[i];
    if (in.tracked()) {
      if (in.graph() != this) throw GraphError(std::string(op_name(op)) + ": operands belong to different graphs");
      n.inputs[i] = in.node();
    } else {
      n.inputs[i] = constant(in);
    }
  }
  n.value = value.detach();
  const NodeId id = push(std::move(n));
  return Tensor(value.shape(), value.buffer(), this, id);
}

}  // namespace metaload::ad
