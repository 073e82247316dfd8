#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sparsedist/error.hpp"

namespace sparsedist::eval {

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path path;
  std::string label;
};

/// Labeled image list. File format: one "relative/path<TAB>label" per line; '#' starts a comment.
struct DatasetManifest {
  std::string name;
  std::vector<ManifestEntry> entries;

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.image_id);
    return out;
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.label);
    return out;
  }

  std::size_t class_count() const {
    std::set<std::string> classes;
    for (const auto& e : entries) classes.insert(e.label);
    return classes.size();
  }
};

inline DatasetManifest load_manifest(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot open manifest " + file.string());
  DatasetManifest manifest;
  manifest.name = file.stem().string();
  const auto base = file.parent_path();
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw IoError(file.string() + ":" + std::to_string(lineno) + ": expected 'path<TAB>label'");
    }
    ManifestEntry entry;
    entry.image_id = line.substr(0, tab);
    entry.label = line.substr(tab + 1);
    entry.path = base / entry.image_id;
    if (!seen.insert(entry.image_id).second) {
      throw IoError(file.string() + ":" + std::to_string(lineno) + ": duplicate image id '" + entry.image_id + "'");
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty()) throw IoError("manifest " + file.string() + " lists no images");
  return manifest;
}

inline void save_manifest(const std::filesystem::path& file, const DatasetManifest& manifest) {
  std::ofstream os(file);
  if (!os) throw IoError("cannot open " + file.string() + " for writing");
  for (const auto& e : manifest.entries) os << e.image_id << '\t' << e.label << '\n';
}

/// Every entry whose file is missing, in manifest order.
inline std::vector<std::filesystem::path> missing_files(const DatasetManifest& manifest) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : manifest.entries) {
    if (!std::filesystem::is_regular_file(e.path)) out.push_back(e.path);
  }
  return out;
}

/// Dense class indices in order of first appearance.
inline std::vector<int> encode_labels(const std::vector<std::string>& labels) {
  std::map<std::string, int> index;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    auto [it, inserted] = index.emplace(l, static_cast<int>(index.size()));
    out.push_back(it->second);
  }
  return out;
}

}  // namespace sparsedist::eval
