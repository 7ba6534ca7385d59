#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "metaload/autodiff/tensor.hpp"

namespace metaload::ad {

class Graph;

struct ParamEntry {
  std::string layer;
  std::string name;
  Tensor value;
};

/// Ordered, layer-grouped collection of named tensors. Entries of one layer are
/// contiguous and layers keep their insertion order.
class ParamSet {
 public:
  void add(std::string layer, std::string name, Tensor value);

  std::size_t size() const { return entries_.size(); }
  const ParamEntry& entry(std::size_t i) const { return entries_[i]; }
  const Tensor& operator[](std::size_t i) const { return entries_[i].value; }
  const Tensor& get(const std::string& layer, const std::string& name) const;

  const std::vector<std::string>& layers() const { return layers_; }
  std::size_t layer_count() const { return layers_.size(); }
  /// Layer index of entry i.
  std::size_t layer_of(std::size_t i) const { return layer_index_[i]; }

  std::vector<Tensor> tensors() const;
  /// Same names and layout, new values (shapes must match).
  ParamSet with_values(std::vector<Tensor> values) const;

  /// Every tensor registered as a leaf of `g`.
  ParamSet track(Graph& g) const;
  ParamSet detach() const;

  std::size_t parameter_count() const;
  bool congruent(const ParamSet& other) const;

  std::vector<double> flatten() const;
  ParamSet unflatten(std::span<const double> values) const;

 private:
  std::vector<ParamEntry> entries_;
  std::vector<std::string> layers_;
  std::vector<std::size_t> layer_index_;
};

}  // namespace metaload::ad
