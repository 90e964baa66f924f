#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "sp2net/bartlett.hpp"
#include "sp2net/inference.hpp"
#include "sp2net/scenario.hpp"

namespace sp2net::cli {

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kInlineScenarioStream = 3;

std::string join(const std::vector<double>& v, char sep) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? std::string(1, sep) : "") << v[i];
  return os.str();
}

Method require_method(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw UsageError("unknown method '" + name + "' (valid: " + valid_method_names() + ")");
  return *m;
}

}  // namespace

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  const RunConfig& cfg = opt.config;
  cfg.validate();
  if (opt.output_model.empty()) throw UsageError("train: an output model path is required");

  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  const TargetSpec spec(cfg.target_elements);
  const auto geom = make_ula(cfg.model.num_elements);
  Rng init_rng(cfg.seed, kInitStream);
  ModelParams model = initialize_model(cfg.model.num_elements, cfg.model.architecture(), init_rng);

  std::filesystem::path log_path = cfg.train_log;
  if (log_path.empty()) log_path = std::filesystem::path(opt.output_model.string() + ".log");
  std::ofstream log(log_path);
  if (!log) throw OutputError("cannot open training log '" + log_path.string() + "'");
  log << "# iteration train_wmse validation_wmse wall_seconds\n";

  out << "training " << model.parameter_count() << " parameters, seed " << cfg.seed << "\n";
  auto on_log = [&](const TrainLogRecord& rec) {
    write_log_record(log, rec);
    log.flush();
    write_log_record(out, rec);
    out.flush();
  };

  try {
    const TrainResult res = train(std::move(model), tc, spec, geom, on_log);
    save_model(res.best_model, opt.output_model);
    out << "best iteration " << res.best_iteration << ", validation wmse " << res.best_validation_wmse
        << (res.stopped_on_patience ? " (early stop)" : "") << "\n"
        << "model written to " << opt.output_model.string() << "\n";
  } catch (const TrainingAborted& e) {
    save_model(e.last_good(), opt.output_model);
    err << "error: " << e.what() << "; last good model written to " << opt.output_model.string() << "\n";
    return kRuntime;
  }
  if (!log) throw OutputError("error writing training log '" + log_path.string() + "'");
  return kOk;
}

int cmd_spectrum(const SpectrumOptions& opt, std::ostream& out, std::ostream& err) {
  const Method method = require_method(opt.method);
  if (method == Method::sp2net && opt.model_path.empty()) {
    throw UsageError("method sp2net requires --model");
  }

  ComplexVector snapshot;
  double sigma_v = 0.0;
  std::string meta;
  std::vector<double> true_angles;
  if (!opt.scenario_file.empty()) {
    if (!opt.angles.empty() || opt.snr_db || opt.sigma_v) {
      throw UsageError("--scenario-file cannot be combined with --angles, --snr or --sigma-v");
    }
    std::ifstream is(opt.scenario_file);
    if (!is) throw OutputError("cannot open scenario file '" + opt.scenario_file.string() + "'");
    const auto scenarios = read_scenarios(is);
    if (opt.scenario_index >= scenarios.size()) {
      throw UsageError("scenario index " + std::to_string(opt.scenario_index) + " out of range (file has " +
                       std::to_string(scenarios.size()) + ")");
    }
    const Scenario& sc = scenarios[opt.scenario_index];
    snapshot = sc.snapshot;
    sigma_v = sc.sigma_v;
    true_angles = sc.sorted_angles();
  } else {
    if (opt.angles.empty()) throw UsageError("give --angles (with --snr or --sigma-v) or --scenario-file");
    if (opt.snr_db.has_value() == opt.sigma_v.has_value()) {
      throw UsageError("give exactly one of --snr and --sigma-v");
    }
    sigma_v = opt.sigma_v ? *opt.sigma_v : sigma_from_snr_db(*opt.snr_db);
    Rng rng(opt.seed, kInlineScenarioStream);
    std::vector<Source> sources;
    for (double th : opt.angles) sources.push_back({th, std::polar(1.0, rng.uniform(0.0, 2.0 * kPi))});
    snapshot = synthesize_snapshot(make_ula(opt.num_elements), sources, sigma_v, rng);
    true_angles = opt.angles;
  }
  meta = "angles=" + join(true_angles, ';');
  {
    std::ostringstream os;
    os.precision(17);
    os << " sigma_v=" << sigma_v;
    meta += os.str();
  }

  const auto geom = make_ula(static_cast<std::size_t>(snapshot.size()));
  const auto grid = AngleGrid::uniform(opt.grid_start, opt.grid_stop, opt.grid_step);

  Spectrum spectrum;
  switch (method) {
    case Method::bartlett:
      spectrum = bartlett_spectrum(geom, snapshot, grid);
      break;
    case Method::sparse: {
      if (sigma_v < opt.sparse.sigma_floor) {
        err << "warning: sigma_v " << sigma_v << " is below sigma_floor; the residual bound uses "
            << opt.sparse.sigma_floor << "\n";
      }
      const auto sol = solve_bpdn(build_manifold_matrix(geom, grid.angles()), snapshot, sigma_v, opt.sparse);
      if (!sol.converged) {
        err << "warning: sparse solver stopped after " << sol.iterations_used << " iterations without converging\n";
      }
      spectrum = sparse_spectrum(sol, grid);
      break;
    }
    case Method::sp2net: {
      const ModelParams model = load_model(opt.model_path);
      spectrum = net_spectrum(model, geom, snapshot, sigma_v, grid);
      break;
    }
  }

  if (opt.output == "-") {
    write_spectrum(out, spectrum, meta);
  } else {
    std::ofstream os(opt.output);
    if (!os) throw OutputError("cannot open '" + opt.output.string() + "' for writing");
    write_spectrum(os, spectrum, meta);
    if (!os) throw OutputError("error writing '" + opt.output.string() + "'");
  }

  if (opt.num_peaks > 0) {
    const auto peaks = find_peaks(spectrum, opt.num_peaks);
    std::ostream& dst = opt.output == "-" ? err : out;
    dst << std::setprecision(10);
    for (std::size_t i = 0; i < peaks.angles.size(); ++i) {
      dst << "peak " << peaks.angles[i] << " " << peaks.scores[i] << "\n";
    }
  }
  return kOk;
}

int cmd_benchmark(const BenchmarkOptions& opt, std::ostream& out, std::ostream&) {
  const RunConfig& cfg = opt.config;
  cfg.validate();
  ExperimentSpec spec = cfg.experiment;
  spec.seed = cfg.seed;
  spec.sparse = cfg.sparse;
  spec.num_elements = cfg.model.num_elements;
  spec.threads = cfg.threads;
  spec.validate();

  std::optional<ModelParams> model;
  const bool wants_net = std::find(spec.methods.begin(), spec.methods.end(), Method::sp2net) != spec.methods.end();
  if (wants_net) {
    if (cfg.model_path.empty()) throw ConfigurationError("method sp2net requires a model (--model)");
    model = load_model(cfg.model_path);
  }

  const auto result = run_experiment(spec, model ? &*model : nullptr);
  emit_results(result, cfg.output_dir);

  out << "experiment " << spec.name << ": " << result.records.size() << " method-trials in "
      << std::setprecision(3) << result.wall_seconds << " s\n";
  out << std::setprecision(6);
  for (const auto& row : result.rmse_table) {
    out << method_name(row.method) << " snr " << row.snr_db << " dB rmse " << row.rmse_deg << " deg\n";
  }
  out << "results in " << cfg.output_dir.string() << "\n";
  return kOk;
}

int cmd_model_info(const std::filesystem::path& model_path, std::ostream& out) {
  const ModelHeader h = read_model_header(model_path);
  std::size_t params = 0;
  for (std::size_t l = 0; l + 1 < h.layer_dims.size(); ++l) {
    params += static_cast<std::size_t>(h.layer_dims[l]) * h.layer_dims[l + 1] + h.layer_dims[l + 1];
  }
  out << "format_version " << h.version << "\n"
      << "num_elements " << h.num_elements << "\n"
      << "layer_dims";
  for (auto d : h.layer_dims) out << " " << d;
  out << "\nskip_pairs";
  if (h.skip_pairs.empty()) out << " none";
  for (const auto& sk : h.skip_pairs) out << " " << sk.source << "-" << sk.target;
  out << "\nparameters " << params << "\n"
      << "file_bytes " << std::filesystem::file_size(model_path) << "\n";
  return kOk;
}

int guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ConfigFileError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ModelFormatError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {  // ConfigError, UsageError, ConfigurationError
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace sp2net::cli
