#include "metaload/model/checkpoint.hpp"

#include <fstream>

#include "metaload/error.hpp"

namespace metaload::model {

using nlohmann::json;

namespace {

json arch_to_json(const ArchConfig& a) {
  return {{"hidden_size", a.hidden_size},
          {"input_len", a.input_len},
          {"output_len", a.output_len},
          {"num_linear_layers", a.num_linear_layers}};
}

ArchConfig arch_from_json(const json& j) {
  ArchConfig a;
  a.hidden_size = j.at("hidden_size").get<std::size_t>();
  a.input_len = j.at("input_len").get<std::size_t>();
  a.output_len = j.at("output_len").get<std::size_t>();
  a.num_linear_layers = j.at("num_linear_layers").get<std::size_t>();
  a.validate();
  return a;
}

}  // namespace

json to_json(const Checkpoint& ckpt) {
  json layers = json::array();
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& e = ckpt.params.entry(i);
    if (layers.empty() || layers.back()["layer"] != e.layer) layers.push_back({{"layer", e.layer}, {"tensors", json::array()}});
    std::vector<std::size_t> shape;
    for (std::size_t d = 0; d < e.value.shape().rank(); ++d) shape.push_back(e.value.shape()[d]);
    layers.back()["tensors"].push_back(
        {{"name", e.name}, {"shape", shape}, {"data", std::vector<double>(e.value.data().begin(), e.value.data().end())}});
  }
  json doc = {{"format_version", kCheckpointFormatVersion}, {"arch_config", arch_to_json(ckpt.arch)}, {"layers", layers}};
  if (ckpt.learned_rates) doc["learned_rates"] = *ckpt.learned_rates;
  if (!ckpt.config.empty()) doc["config"] = ckpt.config;
  if (!ckpt.history.empty()) {
    json h = json::array();
    for (const auto& e : ckpt.history) {
      h.push_back({{"epoch", e.epoch}, {"meta_loss", e.meta_loss}, {"beta", e.beta}, {"second_order", e.second_order}});
    }
    doc["history"] = h;
  }
  return doc;
}

Checkpoint checkpoint_from_json(const json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw DataError("checkpoint: unsupported format_version " + doc.at("format_version").dump());
    }
    Checkpoint ckpt;
    ckpt.arch = arch_from_json(doc.at("arch_config"));
    for (const auto& layer : doc.at("layers")) {
      const std::string name = layer.at("layer").get<std::string>();
      for (const auto& t : layer.at("tensors")) {
        const auto dims = t.at("shape").get<std::vector<std::size_t>>();
        ad::Shape shape;
        if (dims.size() == 1) shape = ad::Shape{dims[0]};
        else if (dims.size() == 2) shape = ad::Shape{dims[0], dims[1]};
        else if (!dims.empty()) throw DataError("checkpoint: tensor rank > 2");
        ckpt.params.add(name, t.at("name").get<std::string>(), Tensor(shape, t.at("data").get<std::vector<double>>()));
      }
    }
    if (!ckpt.params.congruent(init_params(ckpt.arch, 0))) {
      throw DataError("checkpoint: tensors do not match arch_config");
    }
    if (doc.contains("learned_rates")) {
      ckpt.learned_rates = doc.at("learned_rates").get<std::vector<std::vector<double>>>();
      if (ckpt.learned_rates->size() != ckpt.params.layer_count()) throw DataError("checkpoint: learned_rates needs one row per layer");
    }
    if (doc.contains("config")) ckpt.config = doc.at("config");
    if (doc.contains("history")) {
      for (const auto& h : doc.at("history")) {
        ckpt.history.push_back({h.at("epoch").get<std::size_t>(), h.at("meta_loss").get<double>(),
                                h.at("beta").get<double>(), h.at("second_order").get<bool>()});
      }
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << to_json(ckpt).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace metaload::model
