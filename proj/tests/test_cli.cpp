#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sparsedist.hpp"
#include "support/textures.hpp"

using namespace sparsedist;
namespace fs = std::filesystem;
namespace tx = sparsedist::fixtures;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" + SPARSEDIST_CLI_PATH + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "sparsedist_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kQuick = " --patches 600 --iterations 10 --quiet --jobs 2";

/// Writes `per_class` images for each generator and a manifest listing them.
void write_dataset(const fs::path& dir, std::size_t per_class, std::size_t side) {
  std::ofstream manifest(dir / "set.tsv");
  for (std::size_t i = 0; i < per_class; ++i) {
    const auto s = std::to_string(i);
    save_pgm(dir / ("stripes" + s + ".pgm"), tx::stripes(side, 0.3, 6.0, 10 + i));
    save_pgm(dir / ("checks" + s + ".pgm"), tx::checks(side, 4, 20 + i));
    save_pgm(dir / ("noise" + s + ".pgm"), tx::noise(side, 30 + i));
    manifest << "stripes" << s << ".pgm\tstripes\n"
             << "checks" << s << ".pgm\tchecks\n"
             << "noise" << s << ".pgm\tnoise\n";
  }
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Cli, ModelWritesDictionaryAndMetadataReproducibly) {
  const auto dir = fresh_dir("model");
  save_pgm(dir / "img.pgm", tx::blobs(64, 3));
  auto r = run_cli("model img.pgm --out d" + kQuick, dir);
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(dir / "d/img.spdict"));
  ASSERT_TRUE(fs::exists(dir / "d/img.meta"));
  const std::string meta = slurp(dir / "d/img.meta");
  EXPECT_NE(meta.find("image_id=img.pgm"), std::string::npos);
  EXPECT_NE(meta.find("scale="), std::string::npos);
  EXPECT_NE(meta.find("self_complexity="), std::string::npos);
  EXPECT_NE(meta.find("seed=0"), std::string::npos);
  const Dictionary d = load_dictionary(dir / "d/img.spdict");
  EXPECT_EQ(d.n(), 128u);
  const std::string dict_bytes = slurp(dir / "d/img.spdict");
  r = run_cli("model img.pgm --out d" + kQuick, dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "d/img.spdict"), dict_bytes);
  EXPECT_EQ(slurp(dir / "d/img.meta"), meta);
}

TEST(Cli, ModelMatchesLibrary) {
  const auto dir = fresh_dir("model_lib");
  const GrayImage img = tx::stripes(64, 0.9, 5.0, 4);
  save_pgm(dir / "s.pgm", img);
  ASSERT_EQ(run_cli("model s.pgm --out d --seed 5" + kQuick, dir).code, 0);
  PatchConfig pc;
  pc.patch_count = 600;
  pc.seed = 5;
  LearnParams lp;
  lp.iterations = 10;
  lp.seed = 5;
  const ImageModel m = build_model(load_image(dir / "s.pgm"), "s.pgm", pc, lp);
  EXPECT_EQ(load_dictionary(dir / "d/s.spdict"), m.dictionary);
}

TEST(Cli, ConstantImageExitsWithDegenerateInput) {
  const auto dir = fresh_dir("constant");
  save_pgm(dir / "flat.pgm", GrayImage(64, 64, 0.5));
  const auto r = run_cli("model flat.pgm --out d" + kQuick, dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("degenerate input: zero variance"), std::string::npos) << r.err;
}

TEST(Cli, UnreadableImageFailsNamingTheStage) {
  const auto dir = fresh_dir("unreadable");
  std::ofstream(dir / "bad.pgm") << "P5\n10 10\n255\nshort";
  const auto r = run_cli("model bad.pgm --out d" + kQuick, dir);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("load"), std::string::npos) << r.err;
}

TEST(Cli, DistSameFileIsZeroAndSymmetric) {
  const auto dir = fresh_dir("dist");
  save_pgm(dir / "a.pgm", tx::checks(64, 5, 1));
  save_pgm(dir / "b.pgm", tx::stripes(64, 0.4, 7.0, 2));
  auto r = run_cli("dist a.pgm a.pgm" + kQuick, dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "0.000000\n");
  const auto ab = run_cli("dist a.pgm b.pgm" + kQuick, dir);
  const auto ba = run_cli("dist b.pgm a.pgm" + kQuick, dir);
  ASSERT_EQ(ab.code, 0) << ab.err;
  EXPECT_EQ(ab.out, ba.out);
  EXPECT_NE(ab.out, "0.000000\n");
  const auto ncd = run_cli("dist a.pgm b.pgm --kind ncd --compressor xz" + kQuick, dir);
  ASSERT_EQ(ncd.code, 0) << ncd.err;
  const double expected = sparsedist::ncd(image_bytes(load_image(dir / "a.pgm")),
                                          image_bytes(load_image(dir / "b.pgm")), make_compressor("xz"));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f\n", expected);
  EXPECT_EQ(ncd.out, buf);
}

TEST(Cli, DistOrdersNoiseBelowUnrelated) {
  const auto dir = fresh_dir("dist_order");
  const GrayImage ref = tx::patchwork(128, 1);
  save_pgm(dir / "ref.pgm", ref);
  save_pgm(dir / "noisy.pgm", tx::add_noise(ref, 0.05, 7));
  save_pgm(dir / "other.pgm", tx::patchwork(128, 2));
  const auto same = run_cli("dist ref.pgm ref.pgm --quiet", dir);
  const auto noisy = run_cli("dist ref.pgm noisy.pgm --quiet", dir);
  const auto other = run_cli("dist ref.pgm other.pgm --quiet", dir);
  ASSERT_EQ(noisy.code, 0) << noisy.err;
  ASSERT_EQ(other.code, 0) << other.err;
  EXPECT_LT(std::stod(same.out), std::stod(noisy.out));
  EXPECT_LT(std::stod(noisy.out), std::stod(other.out));
}

TEST(Cli, SeedEnvironmentVariableSetsDefaultSeed) {
  const auto dir = fresh_dir("seed_env");
  save_pgm(dir / "img.pgm", tx::blobs(64, 3));
  ASSERT_EQ(run_cli("model img.pgm --out d" + kQuick, dir, "SPARSEDIST_SEED=17").code, 0);
  EXPECT_NE(slurp(dir / "d/img.meta").find("seed=17"), std::string::npos);
  ASSERT_EQ(run_cli("model img.pgm --out e --seed 3" + kQuick, dir, "SPARSEDIST_SEED=17").code, 0);
  EXPECT_NE(slurp(dir / "e/img.meta").find("seed=3"), std::string::npos);
}

TEST(Cli, ClassifyMatchesLibraryExactly) {
  const auto dir = fresh_dir("classify");
  write_dataset(dir, 3, 64);
  const auto r = run_cli("classify set.tsv --out res" + kQuick, dir);
  ASSERT_EQ(r.code, 0) << r.err;

  PatchConfig pc;
  pc.patch_count = 600;
  LearnParams lp;
  lp.iterations = 10;
  const auto manifest = eval::load_manifest(dir / "set.tsv");
  std::vector<ImageModel> models;
  for (const auto& e : manifest.entries) models.push_back(build_model(load_image(e.path), e.image_id, pc, lp));
  const auto d = distance_matrix(models);
  const double acc = eval::knn_loo_classify(d, manifest.labels());
  char buf[64];
  std::snprintf(buf, sizeof buf, "accuracy %.17g\n", acc);
  EXPECT_NE(r.out.find(buf), std::string::npos) << r.out;

  const auto written = load_matrix_csv(dir / "res/matrix.csv");
  EXPECT_TRUE(written.values.cwiseEqual(d.values).all());
  const auto report = read_csv(dir / "res/classify.csv");
  ASSERT_EQ(report.size(), 2u);
  EXPECT_EQ(report[0], (std::vector<std::string>{"metric", "value", "std", "runs"}));
  EXPECT_EQ(std::stod(report[1][1]), acc);
}

TEST(Cli, ClusterReportsEveryRun) {
  const auto dir = fresh_dir("cluster");
  write_dataset(dir, 3, 64);
  const auto r = run_cli("cluster set.tsv --runs 10 --out res" + kQuick, dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir / "res/cluster.csv");
  ASSERT_EQ(rows.size(), 12u);  // header, 10 runs, summary
  std::vector<double> runs;
  for (std::size_t i = 1; i <= 10; ++i) {
    EXPECT_EQ(rows[i][0], "run_" + std::to_string(i));
    runs.push_back(std::stod(rows[i][1]));
  }
  EXPECT_EQ(rows[11][0], "accuracy");
  EXPECT_EQ(rows[11][3], "10");
  const auto [mean, sd] = mean_std(runs);
  EXPECT_NEAR(std::stod(rows[11][1]), mean, 1e-15);
  EXPECT_NEAR(std::stod(rows[11][2]), sd, 1e-15);
}

TEST(Cli, RetrieveUsesClassSizeMinusOne) {
  const auto dir = fresh_dir("retrieve");
  write_dataset(dir, 9, 48);
  const auto r = run_cli("retrieve set.tsv --topk 8 --out res --patches 400 --iterations 5 --quiet --jobs 2", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir / "res/retrieval.csv");
  ASSERT_EQ(rows.size(), 28u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][4], "8");
  EXPECT_TRUE(fs::exists(dir / "res/retrieve.csv"));
}

TEST(Cli, MissingFilesAreAllListed) {
  const auto dir = fresh_dir("missing");
  save_pgm(dir / "present.pgm", tx::noise(32, 1));
  std::ofstream(dir / "set.tsv") << "present.pgm\ta\ngone1.pgm\ta\ngone2.pgm\tb\nsub/gone3.pgm\tb\n";
  const auto r = run_cli("matrix set.tsv --out res" + kQuick, dir);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("3 missing"), std::string::npos) << r.err;
  for (const char* name : {"gone1.pgm", "gone2.pgm", "sub/gone3.pgm"}) {
    EXPECT_NE(r.err.find(name), std::string::npos) << name;
  }
  EXPECT_FALSE(fs::exists(dir / "res/matrix.csv"));
}

TEST(Cli, MatrixIsReproducibleAndUsesCache) {
  const auto dir = fresh_dir("matrix");
  write_dataset(dir, 2, 64);
  ASSERT_EQ(run_cli("matrix set.tsv --out a" + kQuick, dir).code, 0);
  ASSERT_EQ(run_cli("matrix set.tsv --out b" + kQuick, dir).code, 0);
  EXPECT_EQ(slurp(dir / "a/matrix.csv"), slurp(dir / "b/matrix.csv"));
  std::size_t cached = 0;
  for (const auto& e : fs::directory_iterator(dir / "a/cache")) cached += e.path().extension() == ".spdict";
  EXPECT_EQ(cached, 6u);
  // a rerun in the same directory loads every model from the cache
  ASSERT_EQ(run_cli("matrix set.tsv --out a" + kQuick, dir).code, 0);
  EXPECT_EQ(slurp(dir / "a/matrix.csv"), slurp(dir / "b/matrix.csv"));
  const auto ncd = run_cli("matrix set.tsv --out c --kind ncd" + kQuick, dir);
  ASSERT_EQ(ncd.code, 0) << ncd.err;
  EXPECT_EQ(load_matrix_csv(dir / "c/matrix.csv").kind, DistanceKind::Ncd);
}

TEST(Cli, RejectsUnknownOptions) {
  const auto dir = fresh_dir("usage");
  EXPECT_NE(run_cli("frobnicate", dir).code, 0);
  EXPECT_NE(run_cli("dist only_one.pgm", dir).code, 0);
  EXPECT_NE(run_cli("matrix set.tsv --kind euclid", dir).code, 0);
}
