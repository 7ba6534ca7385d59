#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "metaload/model/lstm.hpp"

namespace metaload::model {

inline constexpr int kCheckpointFormatVersion = 1;

struct HistoryEntry {
  std::size_t epoch = 0;
  double meta_loss = 0.0;
  double beta = 0.0;
  bool second_order = false;
};

/// Trained parameters plus whatever produced them.
///
/// JSON layout:
///   {format_version, arch_config, layers: [{layer, tensors: [{name, shape, data}]}],
///    learned_rates?: [[rate per step] per layer], config?, history?: [{epoch, meta_loss, beta, second_order}]}
struct Checkpoint {
  ArchConfig arch;
  ParamSet params;
  std::optional<std::vector<std::vector<double>>> learned_rates;
  nlohmann::json config = nlohmann::json::object();
  std::vector<HistoryEntry> history;
};

nlohmann::json to_json(const Checkpoint& ckpt);
/// Throws DataError on a missing field, wrong version or shape/data mismatch.
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace metaload::model
