#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SPARSEDIST_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring non-numeric SPARSEDIST_SEED='" << env << "'\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sparsedist;
  cli::RunConfig cfg;
  cfg.seed = default_seed();
  cfg.jobs = std::max(1u, std::thread::hardware_concurrency());
  bool no_auto_scale = false;
  std::string kind = "ds";
  std::string cache_dir;

  CLI::App app{"sparsedist: sparse-representation image distance and evaluation harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sparsedist 1.0.0");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--patch-side", cfg.patch.patch_side, "patch side length in pixels")->capture_default_str();
    sub->add_option("--patches", cfg.patch.patch_count, "patches sampled per image")->capture_default_str();
    sub->add_option("--atoms", cfg.learn.n, "dictionary atoms")->capture_default_str();
    sub->add_option("--epsilon", cfg.learn.coding.epsilon, "relative reconstruction error")->capture_default_str();
    sub->add_option("--max-atoms", cfg.learn.coding.max_atoms, "sparsity cap per patch")->capture_default_str();
    sub->add_option("--iterations", cfg.learn.iterations, "K-SVD iterations")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "random seed (default from SPARSEDIST_SEED)")->capture_default_str();
    sub->add_option("--jobs", cfg.jobs, "worker threads")->capture_default_str();
    sub->add_flag("--no-auto-scale", no_auto_scale, "disable LoG scale selection");
    sub->add_option("--kind", kind, "distance kind")->check(CLI::IsMember({"ds", "ncd", "cdm"}))->capture_default_str();
    sub->add_option("--compressor", cfg.compressor, "compressor for ncd/cdm")
        ->check(CLI::IsMember(compressor_names()))
        ->capture_default_str();
    sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    sub->add_option("--cache-dir", cache_dir, "model cache directory (manifest commands default to <out>/cache)");
    sub->add_flag("--quiet", cfg.quiet, "suppress progress output");
  };

  std::string image, image_b, manifest;
  auto* model = app.add_subcommand("model", "learn a dictionary for one image");
  model->add_option("image", image, "image file")->required()->check(CLI::ExistingFile);
  add_common(model);

  auto* dist = app.add_subcommand("dist", "print the distance between two images");
  dist->add_option("a", image, "first image")->required()->check(CLI::ExistingFile);
  dist->add_option("b", image_b, "second image")->required()->check(CLI::ExistingFile);
  add_common(dist);

  auto* matrix = app.add_subcommand("matrix", "pairwise distance matrix over a manifest");
  auto* cluster = app.add_subcommand("cluster", "spectral clustering accuracy over a manifest");
  auto* classify = app.add_subcommand("classify", "leave-one-out 1-NN accuracy over a manifest");
  auto* retrieve = app.add_subcommand("retrieve", "per-query precision/recall over a manifest");
  for (auto* sub : {matrix, cluster, classify, retrieve}) {
    sub->add_option("manifest", manifest, "manifest file (path<TAB>label per line)")->required();
    add_common(sub);
  }
  cluster->add_option("--runs", cfg.runs, "clustering runs to average")->capture_default_str();
  retrieve->add_option("--topk", cfg.top_k, "images retrieved per query")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  cfg.patch.auto_scale = !no_auto_scale;
  cfg.kind = parse_kind(kind);
  cfg.apply_seed();
  const bool manifest_command = !dist->parsed() && !model->parsed();
  if (!cache_dir.empty()) {
    cfg.cache_dir = cache_dir;
  } else if (manifest_command) {
    cfg.cache_dir = cfg.out_dir / "cache";
  }

  try {
    if (model->parsed()) return cli::cmd_model(image, cfg);
    if (dist->parsed()) return cli::cmd_dist(image, image_b, cfg);
    if (matrix->parsed()) return cli::cmd_matrix(manifest, cfg);
    if (cluster->parsed()) return cli::cmd_cluster(manifest, cfg);
    if (classify->parsed()) return cli::cmd_classify(manifest, cfg);
    if (retrieve->parsed()) return cli::cmd_retrieve(manifest, cfg);
  } catch (const cli::StageError& e) {
    std::cerr << "sparsedist: " << e.what() << '\n';
    return e.code();
  } catch (const std::exception& e) {
    std::cerr << "sparsedist: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
