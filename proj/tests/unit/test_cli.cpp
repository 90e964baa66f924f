#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "commands.hpp"
#include "run_config.hpp"
#include "sp2net/scenario.hpp"

namespace sp2net::cli {
namespace {

namespace fs = std::filesystem;

std::vector<Entry> parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config_text(is);
}

struct RunResult {
  int code = -1;
  std::string out;
};

// Runs the sp2net executable; stderr is folded into the captured output.
RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(SP2NET_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t count_data_rows(const fs::path& p) {
  std::ifstream is(p);
  std::size_t n = 0;
  for (std::string line; std::getline(is, line);) n += !line.empty() && line[0] != '#';
  return n;
}

// ---- config text ----

TEST(ConfigText, ScalarsArraysSectionsAndComments) {
  const auto e = parse(R"(# top
seed = 7
[train]
learning_rate = 2.5e-4   # inline comment
max_iterations = 1_000
[model]
hidden = [256, 256,]
equal_width_skips = false
[experiment]
methods = ["bartlett", "sparse"]
name = "quote \" inside"
)");
  ASSERT_EQ(e.size(), 7u);
  EXPECT_EQ(e[0].key, "seed");
  EXPECT_EQ(std::get<std::int64_t>(std::get<Scalar>(e[0].value)), 7);
  EXPECT_EQ(e[1].key, "train.learning_rate");
  EXPECT_EQ(std::get<double>(std::get<Scalar>(e[1].value)), 2.5e-4);
  EXPECT_EQ(std::get<std::int64_t>(std::get<Scalar>(e[2].value)), 1000);
  EXPECT_EQ(std::get<std::vector<Scalar>>(e[3].value).size(), 2u);
  EXPECT_EQ(std::get<bool>(std::get<Scalar>(e[4].value)), false);
  EXPECT_EQ(std::get<std::string>(std::get<Scalar>(e[6].value)), "quote \" inside");

  RunConfig cfg;
  cfg.apply(e);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.train.learning_rate, 2.5e-4);
  EXPECT_EQ(cfg.train.max_iterations, 1000u);
  EXPECT_EQ(cfg.model.hidden, (std::vector<std::uint32_t>{256, 256}));
  EXPECT_TRUE(cfg.model.architecture().skip_pairs.empty());
  EXPECT_EQ(cfg.experiment.methods, (std::vector<Method>{Method::bartlett, Method::sparse}));
}

TEST(ConfigText, SyntaxErrorsNameTheLine) {
  for (const char* bad : {"[train\nx = 1", "seed", "seed = ", "seed = [1, 2", "seed = \"open",
                          "seed = 1 2", "seed = 1\nseed = 2", "bad key = 1", "[a b]"}) {
    try {
      parse(bad);
      ADD_FAILURE() << "accepted: " << bad;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find("<config>:"), std::string::npos) << e.what();
    }
  }
}

TEST(ConfigText, UnknownKeysAndBadTypesRejected) {
  RunConfig cfg;
  try {
    cfg.apply(parse("[train]\nlearning_rte = 1e-3\n"));
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("train.learning_rte"), std::string::npos);
  }
  EXPECT_THROW(cfg.apply(parse("seed = \"seven\"")), ConfigError);
  EXPECT_THROW(cfg.apply(parse("seed = -1")), ConfigError);
  EXPECT_THROW(cfg.apply(parse("[model]\nhidden = 256")), ConfigError);
  try {
    cfg.apply(parse("[experiment]\nmethods = [\"music\"]"));
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bartlett, sparse, sp2net"), std::string::npos);
  }
  EXPECT_THROW(cfg.apply(parse("[experiment]\npreset = \"nope\"")), ConfigError);
}

TEST(ConfigText, PresetAppliesBeforeExplicitKeys) {
  RunConfig cfg;
  cfg.apply(parse("[experiment]\ntrials_per_snr = 3\npreset = \"two_100_105\"\n"));
  EXPECT_EQ(cfg.experiment.true_angles, (std::vector<double>{100.0, 105.0}));
  EXPECT_EQ(cfg.experiment.trials_per_snr, 3u);
}

TEST(ConfigText, DefaultsListingParsesBackToDefaults) {
  const std::string text = default_config_text();
  RunConfig cfg;
  auto entries = parse(text);
  std::erase_if(entries, [](const Entry& e) { return e.key == "experiment.preset"; });
  cfg.apply(entries);
  const RunConfig defaults;
  EXPECT_EQ(cfg.seed, defaults.seed);
  EXPECT_EQ(cfg.train.learning_rate, defaults.train.learning_rate);
  EXPECT_EQ(cfg.train.validation_seed, defaults.train.validation_seed);
  EXPECT_EQ(cfg.model.hidden, defaults.model.hidden);
  EXPECT_EQ(cfg.sparse.sigma_floor, defaults.sparse.sigma_floor);
  EXPECT_EQ(cfg.experiment.methods, defaults.experiment.methods);
  EXPECT_EQ(cfg.experiment.grid_step, defaults.experiment.grid_step);
}

TEST(ConfigText, DefaultModelIsTheDefaultArchitecture) {
  const RunConfig cfg;
  const auto arch = cfg.model.architecture();
  const auto ref = default_architecture(16);
  EXPECT_EQ(arch.layer_dims, ref.layer_dims);
  EXPECT_EQ(arch.skip_pairs, ref.skip_pairs);
}

// ---- executable ----

TEST(Cli, HelpDocumentsFlagsAndDefaults) {
  for (const char* sub : {"train", "spectrum", "benchmark", "model-info"}) {
    const auto r = run_cli(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--"), std::string::npos) << sub;
  }
  const auto r = run_cli("spectrum --help");
  EXPECT_NE(r.out.find("--grid-step"), std::string::npos);
  EXPECT_NE(r.out.find("0.01"), std::string::npos);
  EXPECT_EQ(run_cli("--show-config").code, 0);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli("spectrum --method bartlett --bogus").code, kUsage);
  const auto unknown = run_cli("spectrum --method music --angles 90 --snr 10 -o -");
  EXPECT_EQ(unknown.code, kUsage);
  EXPECT_NE(unknown.out.find("bartlett, sparse, sp2net"), std::string::npos);
  EXPECT_EQ(run_cli("spectrum --method sp2net --angles 90 --snr 10 -o -").code, kUsage);
  EXPECT_EQ(run_cli("spectrum --method bartlett --angles 90 -o -").code, kUsage);
  const auto bm = run_cli("benchmark --preset single_120 --methods bartlett,music");
  EXPECT_EQ(bm.code, kUsage);
  EXPECT_NE(bm.out.find("bartlett, sparse, sp2net"), std::string::npos);
}

TEST(Cli, MissingConfigFileNamesThePath) {
  const auto r = run_cli("train --config /nonexistent/toy.cfg -o /tmp/x.sp2n");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("/nonexistent/toy.cfg"), std::string::npos);
}

TEST(Cli, BartlettSpectrumPeakAndRowCount) {
  const auto dir = fresh_dir("sp2net_cli_spec");
  const auto file = dir / "b.txt";
  const auto r = run_cli("spectrum --method bartlett --angles 120 --snr 40 -q 1 -o " + file.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_data_rows(file), 9001u);
  const auto pos = r.out.find("peak ");
  ASSERT_NE(pos, std::string::npos);
  double peak = 0;
  std::istringstream(r.out.substr(pos + 5)) >> peak;
  // The printed peak is the spectrum maximum: compare with the file.
  std::ifstream is(file);
  std::string line;
  double best_a = 0, best_s = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    double a, s;
    std::istringstream(line) >> a >> s;
    if (s > best_s) best_s = s, best_a = a;
  }
  EXPECT_NEAR(peak, best_a, 0.01);
  EXPECT_NEAR(peak, 120.0, 0.5);

  const auto half = run_cli("spectrum --method bartlett --angles 120 --snr 40 --grid-step 0.5 -o " +
                            (dir / "h.txt").string());
  ASSERT_EQ(half.code, 0);
  EXPECT_EQ(count_data_rows(dir / "h.txt"), 181u);
  fs::remove_all(dir);
}

TEST(Cli, SparseWithZeroSigmaWarns) {
  const auto dir = fresh_dir("sp2net_cli_sparse");
  const auto r = run_cli("spectrum --method sparse --angles 100 --sigma-v 0 --grid-step 0.5 -q 1 -o " +
                         (dir / "s.txt").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("warning"), std::string::npos);
  EXPECT_NE(r.out.find("peak 100 "), std::string::npos) << r.out;
  fs::remove_all(dir);
}

TEST(Cli, ScenarioFileInput) {
  const auto dir = fresh_dir("sp2net_cli_scen");
  Rng rng(4);
  const auto g = make_ula(16);
  std::vector<Scenario> scs{sample_training_scenario(g, rng), sample_training_scenario(g, rng)};
  {
    std::ofstream os(dir / "s.txt");
    write_scenarios(os, scs);
  }
  const auto r = run_cli("spectrum --method bartlett --scenario-file " + (dir / "s.txt").string() +
                         " --scenario-index 1 --grid-step 0.5 -o " + (dir / "o.txt").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_data_rows(dir / "o.txt"), 181u);
  EXPECT_EQ(run_cli("spectrum --method bartlett --scenario-file " + (dir / "s.txt").string() +
                    " --scenario-index 5 -o -").code,
            kUsage);
  fs::remove_all(dir);
}

TEST(Cli, TrainToyModelDeterministicAndLoadable) {
  const auto dir = fresh_dir("sp2net_cli_train");
  {
    std::ofstream os(dir / "toy.cfg");
    os << "seed = 3\n[model]\nhidden = [8]\n[train]\nscenarios_per_iteration = 5\nvalidation_size = 20\n"
          "eval_interval = 10\nmax_iterations = 50\n";
  }
  const auto a = run_cli("train -c " + (dir / "toy.cfg").string() + " -o " + (dir / "a.sp2n").string());
  ASSERT_EQ(a.code, 0) << a.out;
  const auto b = run_cli("train -c " + (dir / "toy.cfg").string() + " -o " + (dir / "b.sp2n").string());
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(slurp(dir / "a.sp2n"), slurp(dir / "b.sp2n"));
  EXPECT_NO_THROW(load_model(dir / "a.sp2n"));
  EXPECT_TRUE(fs::exists(dir / "a.sp2n.log"));

  const auto info = run_cli("model-info " + (dir / "a.sp2n").string());
  EXPECT_EQ(info.code, 0);
  EXPECT_NE(info.out.find("layer_dims 65 8 1"), std::string::npos) << info.out;

  const auto spec = run_cli("spectrum --method sp2net --model " + (dir / "a.sp2n").string() +
                            " --angles 80 --snr 20 --grid-step 1 -o " + (dir / "n.txt").string());
  EXPECT_EQ(spec.code, 0) << spec.out;
  EXPECT_EQ(count_data_rows(dir / "n.txt"), 91u);

  std::ofstream(dir / "junk.sp2n") << "not a model";
  EXPECT_EQ(run_cli("model-info " + (dir / "junk.sp2n").string()).code, kIo);
  fs::remove_all(dir);
}

TEST(Cli, BenchmarkSmokeRun) {
  const auto dir = fresh_dir("sp2net_cli_bench");
  const auto r = run_cli("benchmark --preset two_100_105 --methods bartlett,sparse --trials 2 --snr 0,40 "
                         "--grid-step 0.05 -o " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream csv(dir / "rmse_vs_snr.csv");
  std::string line;
  std::getline(csv, line);
  std::size_t bartlett = 0, sparse = 0;
  while (std::getline(csv, line)) {
    bartlett += line.rfind("bartlett,", 0) == 0;
    sparse += line.rfind("sparse,", 0) == 0;
  }
  EXPECT_EQ(bartlett, 2u);
  EXPECT_EQ(sparse, 2u);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_EQ(run_cli("benchmark --preset two_100_105 --methods sp2net --trials 1 --snr 0 -o " + dir.string()).code,
            kUsage);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace sp2net::cli
