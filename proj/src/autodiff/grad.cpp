#include "metaload/autodiff/grad.hpp"

#include <algorithm>
#include <optional>
#include <string>

#include "metaload/autodiff/graph.hpp"
#include "metaload/autodiff/ops.hpp"
#include "metaload/error.hpp"

namespace metaload::ad {
namespace {

Tensor reshape_like(const Tensor& t, const Shape& shape) { return t.shape() == shape ? t : reshape(t, shape); }

}  // namespace

std::vector<Tensor> grad(const Tensor& loss, std::span<const Tensor> wrt, GradOptions options) {
  if (!loss.tracked()) throw GraphError("grad: loss is not recorded in a graph");
  if (loss.numel() != 1) throw GraphError("grad: loss must be scalar, got shape " + loss.shape().str());
  Graph& g = *loss.graph();
  const NodeId top = loss.node();

  NodeId low = top;
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    if (!wrt[i].tracked() || wrt[i].graph() != &g) {
      throw GraphError("grad: wrt[" + std::to_string(i) + "] is not recorded in the loss graph");
    }
    low = std::min(low, wrt[i].node());
  }

  // needed[id]: node `id` depends on at least one wrt tensor. Only those
  // nodes receive adjoints.
  const std::size_t span_len = static_cast<std::size_t>(top - low) + 1;
  std::vector<char> needed(span_len, 0);
  for (const Tensor& w : wrt) {
    if (w.node() <= top) needed[w.node() - low] = 1;
  }
  for (NodeId id = low; id <= top; ++id) {
    if (needed[id - low]) continue;
    const Node& n = g.node(id);
    for (std::uint8_t k = 0; k < n.arity; ++k) {
      const NodeId in = n.inputs[k];
      if (in >= low && needed[in - low]) {
        needed[id - low] = 1;
        break;
      }
    }
  }

  std::vector<std::optional<Tensor>> adj(span_len);
  adj[top - low] = Tensor::ones(loss.shape());

  const bool record = options.create_graph;
  for (NodeId id = top + 1; id-- > low;) {
    const std::size_t slot = id - low;
    if (!adj[slot] || !needed[slot]) continue;
    // Copy: recording backward ops may reallocate the node storage.
    const Node node = g.node(id);
    if (node.op == OpKind::leaf || node.op == OpKind::constant) continue;

    const Tensor d = *adj[slot];
    auto input = [&](int k) { return record ? g.handle(node.inputs[k]) : g.node(node.inputs[k]).value; };
    auto output = [&]() { return record ? g.handle(id) : node.value; };
    auto wants = [&](int k) {
      const NodeId in = node.inputs[k];
      return in >= low && needed[in - low] != 0;
    };
    auto accumulate = [&](int k, const Tensor& contribution) {
      auto& a = adj[node.inputs[k] - low];
      a = a ? add(*a, contribution) : contribution;
    };

    switch (node.op) {
      case OpKind::add:
        if (wants(0)) accumulate(0, d);
        if (wants(1)) accumulate(1, d);
        break;
      case OpKind::sub:
        if (wants(0)) accumulate(0, d);
        if (wants(1)) accumulate(1, scalar_mul(d, -1.0));
        break;
      case OpKind::mul:
        if (wants(0)) accumulate(0, mul(d, input(1)));
        if (wants(1)) accumulate(1, mul(d, input(0)));
        break;
      case OpKind::scalar_mul:
        if (wants(0)) accumulate(0, scalar_mul(d, node.attrs.scalar));
        break;
      case OpKind::scale: {
        const Tensor s = input(0);
        if (wants(0)) accumulate(0, reshape_like(sum(mul(d, input(1))), s.shape()));
        if (wants(1)) accumulate(1, scale(s, d));
        break;
      }
      case OpKind::matvec: {
        const Tensor m = input(0);
        const Tensor v = input(1);
        const std::size_t rows = m.shape()[0], cols = m.shape()[1];
        if (wants(0)) accumulate(0, matmul(reshape(d, Shape{rows, 1}), reshape(v, Shape{1, cols})));
        if (wants(1)) accumulate(1, matvec(transpose(m), d));
        break;
      }
      case OpKind::matmul: {
        const Tensor a = input(0);
        const Tensor b = input(1);
        const bool ta = node.attrs.trans_a, tb = node.attrs.trans_b;
        if (wants(0)) {
          if (!ta && !tb) accumulate(0, matmul(d, b, false, true));
          else if (!ta && tb) accumulate(0, matmul(d, b, false, false));
          else if (ta && !tb) accumulate(0, matmul(b, d, false, true));
          else accumulate(0, matmul(b, d, true, true));
        }
        if (wants(1)) {
          if (!ta && !tb) accumulate(1, matmul(a, d, true, false));
          else if (!ta && tb) accumulate(1, matmul(d, a, true, false));
          else if (ta && !tb) accumulate(1, matmul(a, d, false, false));
          else accumulate(1, matmul(d, a, true, true));
        }
        break;
      }
      case OpKind::transpose:
        if (wants(0)) accumulate(0, transpose(d));
        break;
      case OpKind::reshape:
        if (wants(0)) accumulate(0, reshape(d, g.node(node.inputs[0]).value.shape()));
        break;
      case OpKind::add_bias:
        if (wants(0)) accumulate(0, d);
        if (wants(1)) accumulate(1, sum_cols(d));
        break;
      case OpKind::sum_cols:
        if (wants(0)) accumulate(0, broadcast_cols(d, g.node(node.inputs[0]).value.shape()[1]));
        break;
      case OpKind::broadcast_cols:
        if (wants(0)) accumulate(0, sum_cols(d));
        break;
      case OpKind::sigmoid: {
        const Tensor y = output();
        if (wants(0)) accumulate(0, mul(d, mul(y, sub(Tensor::ones(y.shape()), y))));
        break;
      }
      case OpKind::tanh: {
        const Tensor y = output();
        if (wants(0)) accumulate(0, mul(d, sub(Tensor::ones(y.shape()), square(y))));
        break;
      }
      case OpKind::square:
        if (wants(0)) accumulate(0, scalar_mul(mul(d, input(0)), 2.0));
        break;
      case OpKind::sum:
        if (wants(0)) accumulate(0, expand(d, g.node(node.inputs[0]).value.shape()));
        break;
      case OpKind::mean: {
        const Shape& s = g.node(node.inputs[0]).value.shape();
        if (wants(0)) accumulate(0, scalar_mul(expand(d, s), 1.0 / static_cast<double>(s.numel())));
        break;
      }
      case OpKind::expand:
        if (wants(0)) accumulate(0, reshape_like(sum(d), g.node(node.inputs[0]).value.shape()));
        break;
      case OpKind::concat_rows: {
        const std::size_t split = node.attrs.extent;
        const std::size_t rows = node.value.shape().rows();
        if (wants(0)) accumulate(0, slice_rows(d, 0, split));
        if (wants(1)) accumulate(1, slice_rows(d, split, rows));
        break;
      }
      case OpKind::slice_rows:
        if (wants(0)) accumulate(0, pad_rows(d, node.attrs.begin, g.node(node.inputs[0]).value.shape().rows()));
        break;
      case OpKind::pad_rows: {
        const std::size_t rows = g.node(node.inputs[0]).value.shape().rows();
        if (wants(0)) accumulate(0, slice_rows(d, node.attrs.begin, node.attrs.begin + rows));
        break;
      }
      case OpKind::leaf:
      case OpKind::constant:
        break;
    }
  }

  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    const NodeId id = wrt[i].node();
    if (id <= top && adj[id - low]) {
      out.push_back(*adj[id - low]);
    } else if (options.allow_unused) {
      out.push_back(Tensor::zeros(wrt[i].shape()));
    } else {
      throw GraphError("grad: wrt[" + std::to_string(i) + "] is unreachable from the loss");
    }
  }
  return out;
}

}  // namespace metaload::ad
