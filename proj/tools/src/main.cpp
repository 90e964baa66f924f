#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace sp2net;
using namespace sp2net::cli;

namespace {

// Flags given on the command line, expressed as configuration entries so
// they go through the same validation as file keys.
struct Overrides {
  std::vector<Entry> entries;

  void number(const std::string& key, const CLI::Option* opt, double v) {
    if (opt->count()) entries.push_back({key, Scalar(v), 0});
  }
  void integer(const std::string& key, const CLI::Option* opt, std::int64_t v) {
    if (opt->count()) entries.push_back({key, Scalar(v), 0});
  }
  void text(const std::string& key, const CLI::Option* opt, const std::string& v) {
    if (opt->count()) entries.push_back({key, Scalar(v), 0});
  }
  void numbers(const std::string& key, const CLI::Option* opt, const std::vector<double>& v) {
    if (!opt->count()) return;
    std::vector<Scalar> items(v.begin(), v.end());
    entries.push_back({key, items, 0});
  }
  void texts(const std::string& key, const CLI::Option* opt, const std::vector<std::string>& v) {
    if (!opt->count()) return;
    std::vector<Scalar> items(v.begin(), v.end());
    entries.push_back({key, items, 0});
  }
};

std::size_t resolve_threads(const CLI::Option* flag, std::size_t flag_value, std::size_t config_value) {
  if (flag->count()) return flag_value;
  if (const auto env = threads_from_env(); env > 0) return env;
  return config_value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-snapshot direction-of-arrival estimation: Bartlett, sparse (BPDN) and a neural "
               "spatial spectrum, with training and Monte-Carlo benchmarking."};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string(SP2NET_VERSION));
  bool show_defaults = false;
  app.add_flag("--show-config", show_defaults, "Print every configuration key with its default value");

  std::size_t threads = 0;
  const std::string threads_help =
      "Worker threads (0 = available parallelism); falls back to SP2NET_THREADS, then the config";

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train a network on synthetic scenarios");
  std::string train_config, train_output, train_log;
  std::uint64_t train_seed = 1;
  std::size_t train_max_iter = 0;
  double train_lr = 1e-3;
  train->add_option("-c,--config", train_config, "Configuration file (sectioned key = value)");
  train->add_option("-o,--output", train_output, "Path of the best model file")->required();
  auto* t_seed = train->add_option("--seed", train_seed, "Random seed")->capture_default_str();
  auto* t_iter = train->add_option("--max-iterations", train_max_iter, "Iteration cap (0 = patience only)")
                     ->capture_default_str();
  auto* t_lr = train->add_option("--learning-rate", train_lr, "Adam step size")->capture_default_str();
  auto* t_log = train->add_option("--log", train_log, "Training log path (default: <output>.log)");
  auto* t_threads = train->add_option("--threads", threads, threads_help)->capture_default_str();

  // ---- spectrum ----
  auto* spectrum = app.add_subcommand("spectrum", "Compute one spatial spectrum");
  SpectrumOptions sopt;
  std::string spectrum_config;
  double snr = 0.0, sigma = 0.0;
  spectrum->add_option("-m,--method", sopt.method, "bartlett, sparse or sp2net")->required();
  spectrum->add_option("--angles", sopt.angles, "Inline source angles in degrees, comma separated")
      ->delimiter(',');
  auto* s_snr = spectrum->add_option("--snr", snr, "Inline SNR in dB (|s|^2 / sigma_v^2)");
  auto* s_sigma = spectrum->add_option("--sigma-v", sigma, "Inline noise standard deviation");
  spectrum->add_option("--scenario-file", sopt.scenario_file, "Scenario file, one scenario per line");
  spectrum->add_option("--scenario-index", sopt.scenario_index, "Line of the scenario file to use")
      ->capture_default_str();
  spectrum->add_option("--elements", sopt.num_elements, "Array elements for inline scenarios")
      ->capture_default_str();
  spectrum->add_option("--grid-start", sopt.grid_start, "First scan angle (deg)")->capture_default_str();
  spectrum->add_option("--grid-stop", sopt.grid_stop, "Last scan angle (deg)")->capture_default_str();
  spectrum->add_option("--grid-step", sopt.grid_step, "Scan step (deg)")->capture_default_str();
  spectrum->add_option("--model", sopt.model_path, "Model file (required for sp2net)");
  spectrum->add_option("-q,--peaks", sopt.num_peaks, "Print this many highest peaks (0 = none)")
      ->capture_default_str();
  spectrum->add_option("-o,--output", sopt.output, "Spectrum file, '-' for stdout")->capture_default_str();
  spectrum->add_option("--seed", sopt.seed, "Seed for inline phases and noise")->capture_default_str();
  spectrum->add_option("-c,--config", spectrum_config, "Configuration file ([sparse] keys are used)");

  // ---- benchmark ----
  auto* bench = app.add_subcommand("benchmark", "Monte-Carlo RMSE-vs-SNR experiment");
  std::string bench_config, bench_preset, bench_model, bench_out, bench_name;
  std::vector<std::string> bench_methods;
  std::vector<double> bench_snr, bench_angles;
  std::size_t bench_trials = 500;
  double bench_step = 0.01;
  std::uint64_t bench_seed = 1;
  bench->add_option("-c,--config", bench_config, "Configuration file (sectioned key = value)");
  auto* b_preset = bench->add_option("-p,--preset", bench_preset,
                                     "single_120, two_100_105, three_60_90_95 or three_63_67_72");
  auto* b_model = bench->add_option("--model", bench_model, "Model file (required for sp2net)");
  auto* b_out = bench->add_option("-o,--output-dir", bench_out, "Output directory (default: results)");
  auto* b_methods = bench->add_option("--methods", bench_methods,
                                      "Comma separated subset of bartlett, sparse, sp2net (default: all)")
                        ->delimiter(',');
  auto* b_snr = bench->add_option("--snr", bench_snr, "Comma separated SNR grid in dB (default: 0..40)")
                    ->delimiter(',');
  auto* b_angles = bench->add_option("--angles", bench_angles, "Comma separated source angles (deg)")
                       ->delimiter(',');
  auto* b_trials = bench->add_option("--trials", bench_trials, "Trials per SNR")->capture_default_str();
  auto* b_step = bench->add_option("--grid-step", bench_step, "Scan step (deg)")->capture_default_str();
  auto* b_name = bench->add_option("--name", bench_name, "Experiment name");
  auto* b_seed = bench->add_option("--seed", bench_seed, "Random seed")->capture_default_str();
  auto* b_threads = bench->add_option("--threads", threads, threads_help)->capture_default_str();

  // ---- model-info ----
  auto* info = app.add_subcommand("model-info", "Print the header of a model file");
  std::string info_path;
  info->add_option("model", info_path, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (show_defaults) {
    std::cout << default_config_text();
    return kOk;
  }

  if (*train) {
    return guarded([&] {
      TrainOptions opt;
      opt.config = load_run_config(train_config);
      Overrides ov;
      ov.integer("seed", t_seed, static_cast<std::int64_t>(train_seed));
      ov.integer("train.max_iterations", t_iter, static_cast<std::int64_t>(train_max_iter));
      ov.number("train.learning_rate", t_lr, train_lr);
      ov.text("paths.train_log", t_log, train_log);
      opt.config.apply(ov.entries);
      opt.config.threads = resolve_threads(t_threads, threads, opt.config.threads);
      opt.output_model = train_output;
      return cmd_train(opt, std::cout, std::cerr);
    }, std::cerr);
  }
  if (*spectrum) {
    return guarded([&] {
      sopt.sparse = load_run_config(spectrum_config).sparse;
      if (s_snr->count()) sopt.snr_db = snr;
      if (s_sigma->count()) sopt.sigma_v = sigma;
      return cmd_spectrum(sopt, std::cout, std::cerr);
    }, std::cerr);
  }
  if (*bench) {
    return guarded([&] {
      BenchmarkOptions opt;
      opt.config = load_run_config(bench_config);
      Overrides ov;
      ov.text("experiment.preset", b_preset, bench_preset);
      ov.text("paths.model", b_model, bench_model);
      ov.text("paths.output_dir", b_out, bench_out);
      ov.texts("experiment.methods", b_methods, bench_methods);
      ov.numbers("experiment.snr_grid", b_snr, bench_snr);
      ov.numbers("experiment.true_angles", b_angles, bench_angles);
      ov.integer("experiment.trials_per_snr", b_trials, static_cast<std::int64_t>(bench_trials));
      ov.number("experiment.grid_step", b_step, bench_step);
      ov.text("experiment.name", b_name, bench_name);
      ov.integer("seed", b_seed, static_cast<std::int64_t>(bench_seed));
      opt.config.apply(ov.entries);
      opt.config.threads = resolve_threads(b_threads, threads, opt.config.threads);
      return cmd_benchmark(opt, std::cout, std::cerr);
    }, std::cerr);
  }
  if (*info) {
    return guarded([&] { return cmd_model_info(info_path, std::cout); }, std::cerr);
  }
  std::cout << app.help();
  return kUsage;
}
