#include "metaload/autodiff/tensor.hpp"

#include <cmath>
#include <sstream>

#include "metaload/error.hpp"

namespace metaload::ad {

Shape::Shape(std::initializer_list<std::size_t> dims) {
  if (dims.size() > 2) throw ShapeError("tensors are limited to rank 2, got rank " + std::to_string(dims.size()));
  rank_ = static_cast<std::uint8_t>(dims.size());
  std::size_t i = 0;
  for (std::size_t d : dims) dims_[i++] = d;
}

std::size_t Shape::numel() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

Shape Shape::with_rows(std::size_t rows) const {
  if (rank_ == 0) throw ShapeError("scalar has no rows");
  Shape out = *this;
  out.dims_[0] = rows;
  return out;
}

bool Shape::operator==(const Shape& other) const {
  if (rank_ != other.rank_) return false;
  for (std::size_t i = 0; i < rank_; ++i) {
    if (dims_[i] != other.dims_[i]) return false;
  }
  return true;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < rank_; ++i) os << (i ? "," : "") << dims_[i];
  os << ']';
  return os.str();
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor::Tensor() : data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape) {
  if (shape.numel() != data.size()) {
    throw ShapeError("tensor shape " + shape.str() + " needs " + std::to_string(shape.numel()) + " values, got " +
                     std::to_string(data.size()));
  }
  if (!all_finite(data)) throw DomainError("tensor constructed from non-finite values");
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor::Tensor(Shape shape, Buffer data, Graph* graph, NodeId node)
    : shape_(shape), data_(std::move(data)), graph_(graph), node_(node) {}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

Tensor Tensor::full(const Shape& shape, double value) { return Tensor(shape, std::vector<double>(shape.numel(), value)); }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() needs a one-element tensor, got " + shape_.str());
  return (*data_)[0];
}

Tensor Tensor::detach() const { return Tensor(shape_, data_, nullptr, 0); }

}  // namespace metaload::ad
