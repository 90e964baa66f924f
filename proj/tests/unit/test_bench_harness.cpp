#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "sp2net/bench_harness.hpp"

namespace sp2net {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream is(p);
  std::size_t n = 0;
  for (std::string line; std::getline(is, line);) ++n;
  return n;
}

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.name = "unit";
  s.true_angles = {120.0};
  s.snr_grid = {0.0, 20.0, 40.0};
  s.trials_per_snr = 10;
  s.methods = {Method::bartlett, Method::sparse};
  s.grid_step = 0.1;
  s.seed = 5;
  s.spectrum_snr_db = 20.0;
  s.threads = 2;
  return s;
}

ModelParams tiny_model() {
  Rng rng(1);
  return initialize_model(16, make_architecture(16, std::vector<std::uint32_t>{8}, {}), rng);
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

TEST(Methods, NamesRoundTrip) {
  for (auto m : {Method::bartlett, Method::sparse, Method::sp2net}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_FALSE(parse_method("music").has_value());
  EXPECT_EQ(valid_method_names(), "bartlett, sparse, sp2net");
}

TEST(Presets, DefinedExperiments) {
  const auto names = preset_names();
  ASSERT_EQ(names.size(), 4u);
  const auto two = find_preset("two_100_105");
  ASSERT_TRUE(two.has_value());
  EXPECT_EQ(two->true_angles, (std::vector<double>{100.0, 105.0}));
  EXPECT_EQ(two->snr_grid, default_snr_grid());
  EXPECT_EQ(two->trials_per_snr, 500u);
  EXPECT_EQ(default_snr_grid().size(), 41u);
  EXPECT_EQ(find_preset("three_63_67_72")->true_angles, (std::vector<double>{63.0, 67.0, 72.0}));
  EXPECT_EQ(find_preset("three_60_90_95")->true_angles, (std::vector<double>{60.0, 90.0, 95.0}));
  EXPECT_EQ(find_preset("single_120")->true_angles, (std::vector<double>{120.0}));
  EXPECT_FALSE(find_preset("nope").has_value());
}

TEST(RunExperiment, NoiselessOnGridSourceHasZeroError) {
  auto s = small_spec();
  s.snr_grid = {300.0};
  s.trials_per_snr = 3;
  const auto res = run_experiment(s, nullptr);
  ASSERT_EQ(res.records.size(), 6u);
  for (const auto& r : res.records) {
    ASSERT_EQ(r.errors.size(), 1u);
    EXPECT_NEAR(r.errors[0], 0.0, 1e-9) << method_name(r.method);
  }
}

TEST(RunExperiment, DeterministicAcrossThreadCounts) {
  auto s = small_spec();
  const auto a = run_experiment(s, nullptr);
  s.threads = 1;
  const auto b = run_experiment(s, nullptr);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].estimated, b.records[i].estimated);
    EXPECT_EQ(a.records[i].method, b.records[i].method);
    EXPECT_EQ(a.records[i].trial, b.records[i].trial);
  }
}

TEST(RunExperiment, ErrorShrinksWithSnr) {
  auto s = small_spec();
  s.trials_per_snr = 40;
  const auto res = run_experiment(s, nullptr);
  for (auto m : s.methods) {
    double lo = -1, hi = -1;
    for (const auto& row : res.rmse_table) {
      if (row.method != m) continue;
      if (row.snr_db == 0.0) lo = row.rmse_deg;
      if (row.snr_db == 40.0) hi = row.rmse_deg;
      EXPECT_EQ(row.trials, 40u);
    }
    EXPECT_LT(hi, lo) << method_name(m);
  }
}

TEST(RunExperiment, RecordsOrderedAndTableConsistent) {
  const auto s = small_spec();
  const auto res = run_experiment(s, nullptr);
  ASSERT_EQ(res.records.size(), 3u * 10u * 2u);
  EXPECT_EQ(res.records[0].method, Method::bartlett);
  EXPECT_EQ(res.records[1].method, Method::sparse);
  EXPECT_EQ(res.records[2].trial, 1u);
  ASSERT_EQ(res.rmse_table.size(), 6u);
  EXPECT_EQ(res.rmse_table[0].method, Method::bartlett);
  EXPECT_EQ(res.rmse_table[3].method, Method::sparse);
  ASSERT_EQ(res.spectra.size(), 2u);
  EXPECT_EQ(res.spectra[0].snr_db, 20.0);
  EXPECT_EQ(res.spectra[0].trial, 0u);
}

TEST(RunExperiment, ConfigurationErrors) {
  auto s = small_spec();
  s.methods = {Method::sp2net};
  EXPECT_THROW(run_experiment(s, nullptr), ConfigurationError);
  const auto model = tiny_model();
  EXPECT_NO_THROW(run_experiment(s, &model));
  s.methods.clear();
  EXPECT_THROW(run_experiment(s, nullptr), ConfigurationError);
  s = small_spec();
  s.true_angles.clear();
  EXPECT_THROW(run_experiment(s, nullptr), ConfigurationError);
  s = small_spec();
  s.grid_step = 0.7;
  EXPECT_THROW(run_experiment(s, nullptr), ConfigurationError);
}

TEST(EmitResults, FilesAndRowCounts) {
  const auto dir = fresh_dir("sp2net_emit_test");
  auto s = small_spec();
  s.methods = {Method::bartlett, Method::sparse, Method::sp2net};
  const auto model = tiny_model();
  const auto res = run_experiment(s, &model);
  emit_results(res, dir);
  EXPECT_EQ(count_lines(dir / "rmse_vs_snr.csv"), 1u + 3u * 3u);
  EXPECT_EQ(count_lines(dir / "trials.csv"), 1u + 3u * 3u * 10u);
  for (const char* m : {"bartlett", "sparse", "sp2net"}) {
    EXPECT_EQ(count_lines(dir / (std::string("spectrum_") + m + ".txt")), 1u + 901u);
  }
  ASSERT_TRUE(fs::exists(dir / "manifest.json"));
  const auto manifest = slurp(dir / "manifest.json");
  EXPECT_NE(manifest.find("\"seed\""), std::string::npos);
  std::ifstream csv(dir / "rmse_vs_snr.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "method,snr_db,rmse_deg,trials");
  fs::remove_all(dir);
}

TEST(EmitResults, RerunIsByteIdentical) {
  const auto d1 = fresh_dir("sp2net_emit_a");
  const auto d2 = fresh_dir("sp2net_emit_b");
  emit_results(run_experiment(small_spec(), nullptr), d1);
  emit_results(run_experiment(small_spec(), nullptr), d2);
  for (const char* f : {"rmse_vs_snr.csv", "trials.csv", "spectrum_bartlett.txt", "spectrum_sparse.txt"}) {
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(EmitResults, UnwritableDirectoryLeavesNoManifest) {
  if (geteuid() == 0) {
    // Root ignores permission bits; use a path whose parent is a regular file.
    const auto base = fresh_dir("sp2net_emit_blocked");
    fs::create_directories(base);
    std::ofstream(base / "file") << "x";
    const auto target = base / "file" / "out";
    EXPECT_THROW(emit_results(run_experiment(small_spec(), nullptr), target), OutputError);
    EXPECT_FALSE(fs::exists(target / "manifest.json"));
    fs::remove_all(base);
    return;
  }
  const auto dir = fresh_dir("sp2net_emit_ro");
  fs::create_directories(dir);
  fs::permissions(dir, fs::perms::owner_read | fs::perms::owner_exec);
  EXPECT_THROW(emit_results(run_experiment(small_spec(), nullptr), dir), OutputError);
  EXPECT_FALSE(fs::exists(dir / "manifest.json"));
  fs::permissions(dir, fs::perms::owner_all);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace sp2net
