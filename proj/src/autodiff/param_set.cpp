#include "metaload/autodiff/param_set.hpp"

#include <algorithm>

#include "metaload/autodiff/graph.hpp"
#include "metaload/error.hpp"

namespace metaload::ad {

void ParamSet::add(std::string layer, std::string name, Tensor value) {
  if (layers_.empty() || layers_.back() != layer) {
    if (std::find(layers_.begin(), layers_.end(), layer) != layers_.end()) {
      throw GraphError("ParamSet: layer '" + layer + "' must be contiguous");
    }
    layers_.push_back(layer);
  }
  layer_index_.push_back(layers_.size() - 1);
  entries_.push_back({std::move(layer), std::move(name), std::move(value)});
}

const Tensor& ParamSet::get(const std::string& layer, const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.layer == layer && e.name == name) return e.value;
  }
  throw GraphError("ParamSet: no tensor " + layer + "/" + name);
}

std::vector<Tensor> ParamSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.value);
  return out;
}

ParamSet ParamSet::with_values(std::vector<Tensor> values) const {
  if (values.size() != entries_.size()) throw ShapeError("ParamSet: value count mismatch");
  ParamSet out = *this;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i].shape() == entries_[i].value.shape())) {
      throw ShapeError("ParamSet: " + entries_[i].layer + "/" + entries_[i].name + " expects " +
                       entries_[i].value.shape().str() + ", got " + values[i].shape().str());
    }
    out.entries_[i].value = std::move(values[i]);
  }
  return out;
}

ParamSet ParamSet::track(Graph& g) const {
  ParamSet out = *this;
  for (auto& e : out.entries_) e.value = g.leaf(e.value);
  return out;
}

ParamSet ParamSet::detach() const {
  ParamSet out = *this;
  for (auto& e : out.entries_) e.value = e.value.detach();
  return out;
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

bool ParamSet::congruent(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.layer != b.layer || a.name != b.name || !(a.value.shape() == b.value.shape())) return false;
  }
  return true;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& e : entries_) out.insert(out.end(), e.value.data().begin(), e.value.data().end());
  return out;
}

ParamSet ParamSet::unflatten(std::span<const double> values) const {
  if (values.size() != parameter_count()) throw ShapeError("ParamSet: flat size mismatch");
  ParamSet out = *this;
  std::size_t offset = 0;
  for (auto& e : out.entries_) {
    const std::size_t n = e.value.numel();
    e.value = Tensor(e.value.shape(), std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(offset),
                                                          values.begin() + static_cast<std::ptrdiff_t>(offset + n)));
    offset += n;
  }
  return out;
}

}  // namespace metaload::ad
