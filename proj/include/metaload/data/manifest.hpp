#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "metaload/data/synth.hpp"
#include "metaload/data/task.hpp"

namespace metaload::data {

inline constexpr int kManifestFormatVersion = 1;

/// One manifest row: a CSV file (relative to the manifest) or synthetic parameters.
struct ManifestEntry {
  std::string id;
  Role role = Role::train;
  std::size_t support_months = 0;
  std::variant<std::filesystem::path, SeriesSpec> source;
};

/// {format_version, tasks: [{id, file | synth: {start, days, seed, n_consumers,
/// winter_peaking}, support_months, role}]}
/// Synthetic entries are generated at 15 minutes like CSV input.
struct Manifest {
  std::vector<ManifestEntry> tasks;
};

nlohmann::json to_json(const Manifest& manifest);
/// Throws DataError on a wrong version or malformed entry.
Manifest manifest_from_json(const nlohmann::json& doc);

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Loads or regenerates every series (CSV paths resolve against `base_dir`),
/// optionally resamples CSV series to `resolution`, and builds the tasks.
MetaDataset build_dataset(const Manifest& manifest, const std::filesystem::path& base_dir,
                          std::chrono::minutes resolution, const WindowPolicy& policy = {});

}  // namespace metaload::data
