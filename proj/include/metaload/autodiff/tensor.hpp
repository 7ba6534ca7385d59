#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace metaload::ad {

class Graph;
using NodeId = std::uint32_t;

/// Dimension list of rank 0 (scalar), 1 (vector) or 2 (row-major matrix).
/// Higher ranks are never needed by the model and are rejected.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t i) const { return dims_[i]; }
  std::size_t numel() const;

  /// Leading extent; 1 for scalars.
  std::size_t rows() const { return rank_ == 0 ? 1 : dims_[0]; }
  /// Trailing extent of a matrix; 1 for vectors and scalars.
  std::size_t cols() const { return rank_ == 2 ? dims_[1] : 1; }

  Shape with_rows(std::size_t rows) const;

  bool operator==(const Shape& other) const;
  std::string str() const;

 private:
  std::array<std::size_t, 2> dims_{};
  std::uint8_t rank_ = 0;
};

using Buffer = std::shared_ptr<const std::vector<double>>;

/// Dense float64 array, optionally bound to a node of a differentiation graph.
///
/// Storage is immutable and shared, so copying a Tensor is cheap and a tensor
/// handed to another thread after detach() carries no graph reference.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor full(const Shape& shape, double value);
  static Tensor zeros(const Shape& shape) { return full(shape, 0.0); }
  static Tensor ones(const Shape& shape) { return full(shape, 1.0); }

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_->size(); }
  std::span<const double> data() const { return *data_; }
  const Buffer& buffer() const { return data_; }

  double item() const;
  double at(std::size_t i) const { return (*data_)[i]; }
  double at(std::size_t r, std::size_t c) const { return (*data_)[r * shape_.cols() + c]; }

  bool tracked() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  NodeId node() const { return node_; }

  /// Same values, no graph binding.
  Tensor detach() const;

  /// Internal constructor used by Graph and the op implementations.
  Tensor(Shape shape, Buffer data, Graph* graph, NodeId node);

 private:
  Shape shape_;
  Buffer data_;
  Graph* graph_ = nullptr;
  NodeId node_ = 0;
};

bool all_finite(std::span<const double> values);

}  // namespace metaload::ad
