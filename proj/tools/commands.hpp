#pragma once

// Command implementations for the sparsedist CLI. Every numeric result comes from the library;
// this layer only loads inputs, caches models and writes reports.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sparsedist.hpp"

namespace sparsedist::cli {

namespace fs = std::filesystem;

struct RunConfig {
  PatchConfig patch;
  LearnParams learn;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::size_t top_k = 8;
  std::size_t runs = 10;
  DistanceKind kind = DistanceKind::SparseDistance;
  std::string compressor = "deflate";
  fs::path out_dir = ".";
  std::optional<fs::path> cache_dir;
  bool quiet = false;

  // seed is shared by patch sampling and dictionary initialization of every image
  void apply_seed() {
    patch.seed = seed;
    learn.seed = seed;
  }

  std::string fingerprint() const {
    std::ostringstream os;
    os << "ps=" << patch.patch_side << ";k=" << patch.patch_count << ";ef=" << patch.energy_fraction
       << ";seed=" << patch.seed << ";auto=" << patch.auto_scale << ";scales=";
    for (auto s : patch.candidate_scales) os << s << ',';
    os << ";n=" << learn.n << ";it=" << learn.iterations << ";lseed=" << learn.seed << ";eps=" << learn.coding.epsilon
       << ";ma=" << learn.coding.max_atoms << ";p=" << static_cast<int>(learn.coding.p);
    return os.str();
  }
};

/// Error tagged with the pipeline stage it came from; `code` is the process exit code.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, int code)
      : std::runtime_error(stage + ": " + what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.what(), 2);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), 1);
  }
}

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Writes via a temporary sibling and renames, so readers never see partial files.
template <typename Writer>
void write_atomically(const fs::path& path, Writer&& writer) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    writer(os);
    if (!os) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

class Progress {
 public:
  explicit Progress(bool quiet) : quiet_(quiet) {}
  void note(const std::string& msg) {
    if (quiet_) return;
    std::lock_guard lock(mutex_);
    std::cerr << msg << '\n';
  }

 private:
  bool quiet_;
  std::mutex mutex_;
};

/// Builds (or loads from the cache) the model for one image file.
inline ImageModel model_for(const fs::path& path, const std::string& id, const RunConfig& cfg) {
  const GrayImage img = stage("load " + path.string(), [&] { return load_image(path); });
  std::optional<fs::path> cached;
  if (cfg.cache_dir) {
    const std::uint64_t key = fnv1a(cfg.fingerprint(), fnv1a(read_file(path)));
    char name[32];
    std::snprintf(name, sizeof name, "%016llx.spdict", static_cast<unsigned long long>(key));
    cached = *cfg.cache_dir / name;
    if (fs::exists(*cached)) {
      Dictionary dict = stage("cache", [&] { return load_dictionary(*cached); });
      return stage("model " + id,
                   [&] { return build_model_with_dictionary(img, id, cfg.patch, cfg.learn, std::move(dict)); });
    }
  }
  ImageModel model = stage("model " + id, [&] { return build_model(img, id, cfg.patch, cfg.learn); });
  if (cached) {
    fs::create_directories(*cfg.cache_dir);
    write_atomically(*cached, [&](std::ostream& os) { write_dictionary(os, model.dictionary); });
  }
  return model;
}

inline eval::DatasetManifest checked_manifest(const fs::path& file) {
  auto manifest = stage("manifest", [&] { return eval::load_manifest(file); });
  const auto missing = eval::missing_files(manifest);
  if (!missing.empty()) {
    std::ostringstream os;
    os << missing.size() << " missing file(s):";
    for (const auto& p : missing) os << "\n  " << p.string();
    throw StageError("manifest", os.str(), 2);
  }
  return manifest;
}

inline DistanceMatrix manifest_matrix(const eval::DatasetManifest& manifest, const RunConfig& cfg, Progress& progress) {
  const auto& entries = manifest.entries;
  if (cfg.kind != DistanceKind::SparseDistance) {
    const Compressor comp = stage("compressor", [&] { return make_compressor(cfg.compressor); });
    std::vector<ByteSignal> signals;
    for (const auto& e : entries) {
      signals.push_back(image_bytes(stage("load " + e.path.string(), [&] { return load_image(e.path); }), e.image_id));
    }
    return stage("matrix", [&] { return compression_matrix(signals, cfg.kind, comp, cfg.jobs); });
  }
  std::vector<ImageModel> models(entries.size());
  parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
    models[i] = model_for(entries[i].path, entries[i].image_id, cfg);
    progress.note("model " + std::to_string(i + 1) + "/" + std::to_string(entries.size()) + " " +
                  entries[i].image_id + " S=" + std::to_string(models[i].self_complexity));
  });
  progress.note("computing " + std::to_string(entries.size() * (entries.size() - 1) / 2) + " pair distances");
  return stage("matrix", [&] { return distance_matrix(models, cfg.jobs); });
}

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ReportRow {
  std::string metric;
  double value = 0.0;
  std::optional<double> std;
  std::size_t runs = 1;
};

inline void write_report(const fs::path& path, const std::vector<ReportRow>& rows) {
  write_atomically(path, [&](std::ostream& os) {
    os << "metric,value,std,runs\n";
    for (const auto& r : rows) {
      os << r.metric << ',' << g17(r.value) << ',' << (r.std ? g17(*r.std) : "") << ',' << r.runs << '\n';
    }
  });
}

inline void print_table(std::ostream& os, const std::string& title, const std::vector<ReportRow>& rows) {
  os << title << '\n';
  for (const auto& r : rows) {
    char line[160];
    if (r.std) {
      std::snprintf(line, sizeof line, "  %-24s %10.6f +/- %.6f  (%zu runs)", r.metric.c_str(), r.value, *r.std,
                    r.runs);
    } else {
      std::snprintf(line, sizeof line, "  %-24s %10.6f", r.metric.c_str(), r.value);
    }
    os << line << '\n';
  }
}

inline std::pair<double, double> mean_and_std(const std::vector<double>& v) {
  const auto [mean, sd] = mean_std(v);
  return {mean, sd};
}

// ---------------------------------------------------------------------------

inline int cmd_model(const fs::path& image, const RunConfig& cfg) {
  const std::string id = image.filename().string();
  const ImageModel model = model_for(image, id, cfg);
  fs::create_directories(cfg.out_dir);
  const std::string stem = image.stem().string();
  write_atomically(cfg.out_dir / (stem + ".spdict"), [&](std::ostream& os) { write_dictionary(os, model.dictionary); });
  write_atomically(cfg.out_dir / (stem + ".meta"), [&](std::ostream& os) {
    os << "image_id=" << model.image_id << '\n'
       << "scale=" << model.scale << '\n'
       << "self_complexity=" << g17(model.self_complexity) << '\n'
       << "seed=" << cfg.seed << '\n'
       << "patch_side=" << cfg.patch.patch_side << '\n'
       << "patches=" << cfg.patch.patch_count << '\n'
       << "atoms=" << cfg.learn.n << '\n'
       << "epsilon=" << g17(cfg.learn.coding.epsilon) << '\n'
       << "max_atoms=" << cfg.learn.coding.max_atoms << '\n'
       << "iterations=" << cfg.learn.iterations << '\n';
  });
  std::cout << model.image_id << " scale=" << model.scale << " S=" << fixed6(model.self_complexity) << '\n';
  return 0;
}

inline int cmd_dist(const fs::path& a, const fs::path& b, const RunConfig& cfg) {
  double value = 0.0;
  if (cfg.kind == DistanceKind::SparseDistance) {
    const ImageModel ma = model_for(a, a.string(), cfg);
    const ImageModel mb = model_for(b, b.string(), cfg);
    value = stage("distance", [&] { return distance(ma, mb, cfg.jobs); });
  } else {
    const Compressor comp = stage("compressor", [&] { return make_compressor(cfg.compressor); });
    const auto xa = image_bytes(stage("load " + a.string(), [&] { return load_image(a); }), a.string());
    const auto xb = image_bytes(stage("load " + b.string(), [&] { return load_image(b); }), b.string());
    value = stage("distance", [&] { return cfg.kind == DistanceKind::Ncd ? ncd(xa, xb, comp) : cdm(xa, xb, comp); });
  }
  std::cout << fixed6(value) << '\n';
  return 0;
}

inline int cmd_matrix(const fs::path& manifest_file, const RunConfig& cfg) {
  Progress progress(cfg.quiet);
  const auto manifest = checked_manifest(manifest_file);
  const auto d = manifest_matrix(manifest, cfg, progress);
  fs::create_directories(cfg.out_dir);
  write_atomically(cfg.out_dir / "matrix.csv", [&](std::ostream& os) { write_matrix_csv(os, d); });
  std::cout << "wrote " << (cfg.out_dir / "matrix.csv").string() << " (" << d.size() << "x" << d.size() << ", "
            << kind_name(d.kind) << ")\n";
  return 0;
}

inline int cmd_cluster(const fs::path& manifest_file, const RunConfig& cfg) {
  Progress progress(cfg.quiet);
  const auto manifest = checked_manifest(manifest_file);
  const auto d = manifest_matrix(manifest, cfg, progress);
  const auto truth = eval::encode_labels(manifest.labels());
  const std::size_t k = manifest.class_count();
  const auto affinity = stage("affinity", [&] { return eval::affinity_from_distance(d); });
  std::vector<double> accuracies;
  std::vector<ReportRow> rows;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const auto result = stage("cluster", [&] { return eval::spectral_cluster(affinity, k, mix_seed(cfg.seed, r), 10); });
    const double acc = eval::hungarian_accuracy(result.assignments, truth);
    accuracies.push_back(acc);
    rows.push_back({"run_" + std::to_string(r + 1), acc, std::nullopt, 1});
  }
  const auto [mean, sd] = mean_and_std(accuracies);
  rows.push_back({"accuracy", mean, sd, cfg.runs});
  fs::create_directories(cfg.out_dir);
  write_atomically(cfg.out_dir / "matrix.csv", [&](std::ostream& os) { write_matrix_csv(os, d); });
  write_report(cfg.out_dir / "cluster.csv", rows);
  print_table(std::cout, "spectral clustering, k=" + std::to_string(k) + " (" + manifest.name + ")", rows);
  return 0;
}

inline int cmd_classify(const fs::path& manifest_file, const RunConfig& cfg) {
  Progress progress(cfg.quiet);
  const auto manifest = checked_manifest(manifest_file);
  const auto d = manifest_matrix(manifest, cfg, progress);
  const auto labels = manifest.labels();
  const double acc = stage("classify", [&] { return eval::knn_loo_classify(d, labels); });
  const std::vector<ReportRow> rows{{"loo_1nn_accuracy", acc, std::nullopt, 1}};
  fs::create_directories(cfg.out_dir);
  write_atomically(cfg.out_dir / "matrix.csv", [&](std::ostream& os) { write_matrix_csv(os, d); });
  write_report(cfg.out_dir / "classify.csv", rows);
  print_table(std::cout, "leave-one-out 1-NN (" + manifest.name + ")", rows);
  std::cout << "accuracy " << g17(acc) << '\n';
  return 0;
}

inline int cmd_retrieve(const fs::path& manifest_file, const RunConfig& cfg) {
  Progress progress(cfg.quiet);
  const auto manifest = checked_manifest(manifest_file);
  const auto d = manifest_matrix(manifest, cfg, progress);
  std::map<std::string, std::string> labels;
  for (const auto& e : manifest.entries) labels[e.image_id] = e.label;
  std::vector<double> precisions, recalls;
  fs::create_directories(cfg.out_dir);
  write_atomically(cfg.out_dir / "retrieval.csv", [&](std::ostream& os) {
    os << "query,label,precision,recall,recall_denominator\n";
    for (const auto& e : manifest.entries) {
      const auto ranked = stage("retrieve", [&] { return eval::retrieve(d, e.image_id, cfg.top_k); });
      const auto pr = stage("retrieve", [&] { return eval::precision_recall(ranked, labels, e.image_id); });
      std::size_t class_size = 0;
      for (const auto& [id, label] : labels) class_size += label == e.label;
      os << e.image_id << ',' << e.label << ',' << g17(pr.precision) << ',' << g17(pr.recall) << ','
         << class_size - 1 << '\n';
      precisions.push_back(pr.precision);
      recalls.push_back(pr.recall);
    }
  });
  const auto [pm, ps] = mean_and_std(precisions);
  const auto [rm, rs] = mean_and_std(recalls);
  const std::vector<ReportRow> rows{{"precision_at_" + std::to_string(cfg.top_k), pm, ps, precisions.size()},
                                    {"recall_at_" + std::to_string(cfg.top_k), rm, rs, recalls.size()}};
  write_atomically(cfg.out_dir / "matrix.csv", [&](std::ostream& os) { write_matrix_csv(os, d); });
  write_report(cfg.out_dir / "retrieve.csv", rows);
  print_table(std::cout, "retrieval, K=" + std::to_string(cfg.top_k) + " (" + manifest.name + ")", rows);
  return 0;
}

}  // namespace sparsedist::cli
