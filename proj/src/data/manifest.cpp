#include "metaload/data/manifest.hpp"

#include <fstream>

#include "metaload/error.hpp"
#include "metaload/parallel.hpp"

namespace metaload::data {

using nlohmann::json;
using namespace std::chrono;

json to_json(const Manifest& manifest) {
  json tasks = json::array();
  for (const auto& e : manifest.tasks) {
    json t{{"id", e.id}, {"role", role_name(e.role)}, {"support_months", e.support_months}};
    if (const auto* path = std::get_if<std::filesystem::path>(&e.source)) {
      t["file"] = path->generic_string();
    } else {
      const auto& s = std::get<SeriesSpec>(e.source);
      t["synth"] = {{"start", format_iso(TimePoint{s.start}).substr(0, 10)},
                    {"days", s.days},
                    {"seed", s.seed},
                    {"n_consumers", s.n_consumers},
                    {"winter_peaking", s.winter_peaking}};
    }
    tasks.push_back(std::move(t));
  }
  return {{"format_version", kManifestFormatVersion}, {"tasks", std::move(tasks)}};
}

Manifest manifest_from_json(const json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kManifestFormatVersion) {
      throw DataError("manifest: unsupported format_version " + doc.at("format_version").dump());
    }
    Manifest m;
    for (const auto& t : doc.at("tasks")) {
      ManifestEntry e;
      e.id = t.at("id").get<std::string>();
      e.role = parse_role(t.at("role").get<std::string>());
      e.support_months = t.value("support_months", std::size_t{0});
      const bool has_file = t.contains("file"), has_synth = t.contains("synth");
      if (has_file == has_synth) throw DataError("manifest: task " + e.id + " needs exactly one of file or synth");
      if (has_file) {
        e.source = std::filesystem::path(t.at("file").get<std::string>());
      } else {
        const auto& s = t.at("synth");
        SeriesSpec spec;
        spec.id = e.id;
        spec.role = e.role;
        spec.support_months = e.support_months;
        spec.start = floor<days>(parse_iso(s.at("start").get<std::string>() + "T00:00:00Z"));
        spec.days = s.at("days").get<std::size_t>();
        spec.seed = s.at("seed").get<std::uint64_t>();
        spec.n_consumers = s.value("n_consumers", std::size_t{50});
        spec.winter_peaking = s.value("winter_peaking", true);
        e.source = spec;
      }
      m.tasks.push_back(std::move(e));
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return manifest_from_json(doc);
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << to_json(manifest).dump(1) << '\n';
}

MetaDataset build_dataset(const Manifest& manifest, const std::filesystem::path& base_dir, minutes resolution,
                          const WindowPolicy& policy) {
  std::vector<Task> tasks(manifest.tasks.size());
  for_each_index(manifest.tasks.size(), Execution::parallel, [&](std::size_t i) {
    const auto& e = manifest.tasks[i];
    TimeSeries series;
    if (const auto* path = std::get_if<std::filesystem::path>(&e.source)) {
      const std::filesystem::path full = path->is_absolute() ? *path : base_dir / *path;
      series = ingest_csv(std::span(&full, 1)).front();
    } else {
      series = synth_series(std::get<SeriesSpec>(e.source));
    }
    series.id = e.id;
    if (series.resolution != resolution) series = resample(series, resolution);
    tasks[i] = build_task(series, e.support_months, policy);
  });
  MetaDataset ds;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    (manifest.tasks[i].role == Role::train ? ds.train_tasks : ds.test_tasks).push_back(std::move(tasks[i]));
  }
  ds.validate();
  return ds;
}

}  // namespace metaload::data
