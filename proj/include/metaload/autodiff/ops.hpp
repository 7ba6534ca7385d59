#pragma once

#include <cstddef>

#include "metaload/autodiff/tensor.hpp"

/// Differentiable tensor operations.
///
/// Every op computes plain values when no input is tracked. When any input is
/// tracked the result is recorded in that input's graph; tracked inputs from
/// two different graphs are an error. There is no implicit broadcasting: each
/// admissible shape combination is an explicit op (add_bias, expand, ...).
///
/// Shape violations throw ShapeError naming the op and the offending shapes.
/// Non-finite results throw DomainError.
namespace metaload::ad {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
/// s * a where s holds exactly one element (rank 0 or [1]).
Tensor scale(const Tensor& s, const Tensor& a);

/// [m,n] x [n] -> [m]
Tensor matvec(const Tensor& m, const Tensor& v);
/// op(a) x op(b), op = transpose when the flag is set. Both operands rank 2.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, const Shape& shape);

/// [m,n] + [m], the vector added to every column.
Tensor add_bias(const Tensor& a, const Tensor& bias);
Tensor sum_cols(const Tensor& a);
Tensor broadcast_cols(const Tensor& v, std::size_t cols);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor square(const Tensor& a);

/// Rank-0 reductions.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// One-element tensor repeated to `shape`.
Tensor expand(const Tensor& s, const Shape& shape);

Tensor concat_rows(const Tensor& a, const Tensor& b);
/// Rows [begin, end) of a vector or matrix.
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
/// Places `a` at row offset `begin` inside a zero tensor with `total` rows.
Tensor pad_rows(const Tensor& a, std::size_t begin, std::size_t total);

}  // namespace metaload::ad
