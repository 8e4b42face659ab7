#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "radfp/error.hpp"
#include "radfp/nrrd.hpp"
#include "radfp/volume.hpp"

namespace radfp {

inline constexpr std::array<const char*, 3> kViewNames = {"axial", "coronal",
                                                          "sagittal"};
inline constexpr std::array<const char*, 3> kTaskNames = {"abnormal", "acl",
                                                          "meniscus"};

inline int view_index(const std::string& name) {
  for (int i = 0; i < 3; ++i)
    if (name == kViewNames[i]) return i;
  throw invalid_argument("unknown view: " + name);
}

inline bool known_task(const std::string& name) {
  for (const char* t : kTaskNames)
    if (name == t) return true;
  return false;
}

/// Three co-registered view volumes plus binary task labels.
struct Study {
  std::string study_id;
  std::array<Volume, 3> views;  // axial, coronal, sagittal
  std::map<std::string, int> labels;

  int label(const std::string& task) const {
    auto it = labels.find(task);
    if (it == labels.end())
      throw invalid_argument("study " + study_id + " has no label for task " +
                             task);
    return it->second;
  }

  /// All three views share dims (required after preprocessing).
  bool views_aligned() const {
    return views[0].dims == views[1].dims && views[1].dims == views[2].dims;
  }
};

/// One manifest line: volume paths plus labels, volumes not yet loaded.
struct ManifestEntry {
  std::string study_id;
  std::array<std::filesystem::path, 3> view_paths;
  std::map<std::string, int> labels;
};

/// Parse a JSON Lines manifest. Relative volume paths are resolved against
/// the manifest's directory.
inline std::vector<ManifestEntry> load_manifest(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open manifest: " + path.string());
  const std::filesystem::path base = path.parent_path();

  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw parse_error("manifest line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    ManifestEntry e;
    try {
      e.study_id = j.at("study_id").get<std::string>();
      const auto& views = j.at("views");
      for (int v = 0; v < 3; ++v) {
        std::filesystem::path p =
            views.at(kViewNames[v]).get<std::string>();
        e.view_paths[v] = p.is_relative() ? base / p : p;
      }
      for (const auto& [task, value] : j.at("labels").items()) {
        int lab = value.get<int>();
        if (lab != 0 && lab != 1)
          throw parse_error("manifest line " + std::to_string(line_no) +
                            ": label for " + task + " must be 0 or 1");
        e.labels[task] = lab;
      }
    } catch (const nlohmann::json::exception& ex) {
      throw parse_error("manifest line " + std::to_string(line_no) + ": " +
                        ex.what());
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

inline Study load_study(const ManifestEntry& entry) {
  Study s;
  s.study_id = entry.study_id;
  s.labels = entry.labels;
  for (int v = 0; v < 3; ++v)
    s.views[v] = nrrd::load_volume(entry.view_paths[v]);
  return s;
}

inline void write_manifest(const std::vector<ManifestEntry>& entries,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot open manifest for writing: " + path.string());
  for (const auto& e : entries) {
    nlohmann::json j;
    j["study_id"] = e.study_id;
    for (int v = 0; v < 3; ++v)
      j["views"][kViewNames[v]] = e.view_paths[v].filename().string();
    for (const auto& [task, lab] : e.labels) j["labels"][task] = lab;
    out << j.dump() << "\n";
  }
  if (!out) throw error("write failed: " + path.string());
}

}  // namespace radfp
