#include "metaload/autodiff/ops.hpp"

#include <cmath>
#include <initializer_list>
#include <string>

#include "metaload/autodiff/graph.hpp"
#include "metaload/error.hpp"
#include "metaload/kernels/dense.hpp"

namespace metaload::ad {
namespace {

[[noreturn]] void shape_error(OpKind op, const std::string& detail) {
  throw ShapeError(std::string(op_name(op)) + ": " + detail);
}

[[noreturn]] void shape_error(OpKind op, const Shape& a, const Shape& b) {
  shape_error(op, "incompatible shapes " + a.str() + " and " + b.str());
}

Graph* common_graph(OpKind op, std::initializer_list<const Tensor*> inputs) {
  Graph* g = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->tracked()) continue;
    if (g != nullptr && g != t->graph()) throw GraphError(std::string(op_name(op)) + ": operands belong to different graphs");
    g = t->graph();
  }
  return g;
}

Tensor finish(OpKind op, std::initializer_list<const Tensor*> inputs, OpAttrs attrs, Shape shape,
              std::vector<double> data) {
  if (!all_finite(data)) throw DomainError(std::string(op_name(op)) + ": non-finite result");
  Tensor value(shape, std::make_shared<const std::vector<double>>(std::move(data)), nullptr, 0);
  Graph* g = common_graph(op, inputs);
  if (g == nullptr) return value;
  return g->record(op, std::span<const Tensor* const>(inputs.begin(), inputs.size()), std::move(attrs), std::move(value));
}

template <class F>
Tensor unary(OpKind op, const Tensor& a, F f) {
  std::vector<double> out(a.numel());
  const auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return finish(op, {&a}, {}, a.shape(), std::move(out));
}

template <class F>
Tensor binary(OpKind op, const Tensor& a, const Tensor& b, F f) {
  if (!(a.shape() == b.shape())) shape_error(op, a.shape(), b.shape());
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i], y[i]);
  return finish(op, {&a, &b}, {}, a.shape(), std::move(out));
}

void require_rank(OpKind op, const Tensor& t, std::size_t rank) {
  if (t.shape().rank() != rank) {
    shape_error(op, "expected rank " + std::to_string(rank) + ", got " + t.shape().str());
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(OpKind::add, a, b, [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(OpKind::sub, a, b, [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(OpKind::mul, a, b, [](double x, double y) { return x * y; });
}

Tensor scalar_mul(const Tensor& a, double c) {
  if (!std::isfinite(c)) throw DomainError("scalar_mul: non-finite factor");
  std::vector<double> out(a.numel());
  const auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * c;
  OpAttrs attrs;
  attrs.scalar = c;
  return finish(OpKind::scalar_mul, {&a}, attrs, a.shape(), std::move(out));
}

Tensor scale(const Tensor& s, const Tensor& a) {
  if (s.numel() != 1) shape_error(OpKind::scale, "factor must hold one element, got " + s.shape().str());
  const double c = s.data()[0];
  std::vector<double> out(a.numel());
  const auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * in[i];
  return finish(OpKind::scale, {&s, &a}, {}, a.shape(), std::move(out));
}

Tensor matvec(const Tensor& m, const Tensor& v) {
  require_rank(OpKind::matvec, m, 2);
  require_rank(OpKind::matvec, v, 1);
  const std::size_t rows = m.shape()[0], cols = m.shape()[1];
  if (v.shape()[0] != cols) shape_error(OpKind::matvec, m.shape(), v.shape());
  std::vector<double> out(rows);
  kernels::gemm({rows, 1, cols, false, false}, m.data(), v.data(), out);
  return finish(OpKind::matvec, {&m, &v}, {}, Shape{rows}, std::move(out));
}

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  require_rank(OpKind::matmul, a, 2);
  require_rank(OpKind::matmul, b, 2);
  const std::size_t m = trans_a ? a.shape()[1] : a.shape()[0];
  const std::size_t ka = trans_a ? a.shape()[0] : a.shape()[1];
  const std::size_t kb = trans_b ? b.shape()[1] : b.shape()[0];
  const std::size_t n = trans_b ? b.shape()[0] : b.shape()[1];
  if (ka != kb) {
    shape_error(OpKind::matmul, std::string("incompatible shapes ") + a.shape().str() + (trans_a ? "^T" : "") + " and " +
                                    b.shape().str() + (trans_b ? "^T" : ""));
  }
  std::vector<double> out(m * n);
  kernels::gemm({m, n, ka, trans_a, trans_b}, a.data(), b.data(), out);
  OpAttrs attrs;
  attrs.trans_a = trans_a;
  attrs.trans_b = trans_b;
  return finish(OpKind::matmul, {&a, &b}, attrs, Shape{m, n}, std::move(out));
}

Tensor transpose(const Tensor& a) {
  require_rank(OpKind::transpose, a, 2);
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  std::vector<double> out(r * c);
  const auto in = a.data();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
  }
  return finish(OpKind::transpose, {&a}, {}, Shape{c, r}, std::move(out));
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  if (shape.numel() != a.numel()) shape_error(OpKind::reshape, a.shape(), shape);
  std::vector<double> out(a.data().begin(), a.data().end());
  OpAttrs attrs;
  attrs.shape = shape;
  return finish(OpKind::reshape, {&a}, attrs, shape, std::move(out));
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_rank(OpKind::add_bias, a, 2);
  require_rank(OpKind::add_bias, bias, 1);
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  if (bias.shape()[0] != r) shape_error(OpKind::add_bias, a.shape(), bias.shape());
  std::vector<double> out(r * c);
  const auto in = a.data();
  const auto b = bias.data();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = in[i * c + j] + b[i];
  }
  return finish(OpKind::add_bias, {&a, &bias}, {}, a.shape(), std::move(out));
}

Tensor sum_cols(const Tensor& a) {
  require_rank(OpKind::sum_cols, a, 2);
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  std::vector<double> out(r, 0.0);
  const auto in = a.data();
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += in[i * c + j];
    out[i] = acc;
  }
  return finish(OpKind::sum_cols, {&a}, {}, Shape{r}, std::move(out));
}

Tensor broadcast_cols(const Tensor& v, std::size_t cols) {
  require_rank(OpKind::broadcast_cols, v, 1);
  const std::size_t r = v.shape()[0];
  std::vector<double> out(r * cols);
  const auto in = v.data();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = in[i];
  }
  OpAttrs attrs;
  attrs.extent = cols;
  return finish(OpKind::broadcast_cols, {&v}, attrs, Shape{r, cols}, std::move(out));
}

Tensor sigmoid(const Tensor& a) {
  return unary(OpKind::sigmoid, a, [](double x) {
    // Split by sign so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

Tensor tanh(const Tensor& a) {
  return unary(OpKind::tanh, a, [](double x) { return std::tanh(x); });
}

Tensor square(const Tensor& a) {
  return unary(OpKind::square, a, [](double x) { return x * x; });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return finish(OpKind::sum, {&a}, {}, Shape{}, {acc});
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) shape_error(OpKind::mean, "empty tensor");
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return finish(OpKind::mean, {&a}, {}, Shape{}, {acc / static_cast<double>(a.numel())});
}

Tensor expand(const Tensor& s, const Shape& shape) {
  if (s.numel() != 1) shape_error(OpKind::expand, "source must hold one element, got " + s.shape().str());
  OpAttrs attrs;
  attrs.shape = shape;
  return finish(OpKind::expand, {&s}, attrs, shape, std::vector<double>(shape.numel(), s.data()[0]));
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.shape().rank() == 0 || a.shape().rank() != b.shape().rank() || a.shape().cols() != b.shape().cols()) {
    shape_error(OpKind::concat_rows, a.shape(), b.shape());
  }
  std::vector<double> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  OpAttrs attrs;
  attrs.extent = a.shape().rows();
  return finish(OpKind::concat_rows, {&a, &b}, attrs, a.shape().with_rows(a.shape().rows() + b.shape().rows()),
                std::move(out));
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.shape().rank() == 0 || begin > end || end > a.shape().rows()) {
    shape_error(OpKind::slice_rows, "rows [" + std::to_string(begin) + "," + std::to_string(end) + ") out of " +
                                        a.shape().str());
  }
  const std::size_t c = a.shape().cols();
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(begin * c),
                          a.data().begin() + static_cast<std::ptrdiff_t>(end * c));
  OpAttrs attrs;
  attrs.begin = begin;
  attrs.end = end;
  return finish(OpKind::slice_rows, {&a}, attrs, a.shape().with_rows(end - begin), std::move(out));
}

Tensor pad_rows(const Tensor& a, std::size_t begin, std::size_t total) {
  if (a.shape().rank() == 0 || begin + a.shape().rows() > total) {
    shape_error(OpKind::pad_rows, a.shape().str() + " at row " + std::to_string(begin) + " exceeds " +
                                      std::to_string(total) + " rows");
  }
  const std::size_t c = a.shape().cols();
  std::vector<double> out(total * c, 0.0);
  std::copy(a.data().begin(), a.data().end(), out.begin() + static_cast<std::ptrdiff_t>(begin * c));
  OpAttrs attrs;
  attrs.begin = begin;
  attrs.extent = total;
  return finish(OpKind::pad_rows, {&a}, attrs, a.shape().with_rows(total), std::move(out));
}

}  // namespace metaload::ad
