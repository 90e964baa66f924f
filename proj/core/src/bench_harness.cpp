#include "sp2net/bench_harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sp2net/bartlett.hpp"
#include "sp2net/inference.hpp"
#include "sp2net/scenario.hpp"

#ifndef SP2NET_VERSION
#define SP2NET_VERSION "unknown"
#endif

namespace sp2net {

namespace {

constexpr std::uint64_t kBenchStreamBase = 1000;

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::bartlett: return "bartlett";
    case Method::sparse: return "sparse";
    case Method::sp2net: return "sp2net";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "bartlett") return Method::bartlett;
  if (name == "sparse") return Method::sparse;
  if (name == "sp2net") return Method::sp2net;
  return std::nullopt;
}

std::string valid_method_names() { return "bartlett, sparse, sp2net"; }

AngleGrid ExperimentSpec::grid() const { return AngleGrid::uniform(grid_start, grid_stop, grid_step); }

void ExperimentSpec::validate() const {
  if (true_angles.empty()) throw ConfigurationError("experiment '" + name + "': no source angles");
  if (snr_grid.empty()) throw ConfigurationError("experiment '" + name + "': empty SNR grid");
  if (trials_per_snr == 0) throw ConfigurationError("experiment '" + name + "': trials_per_snr must be >= 1");
  if (methods.empty()) {
    throw ConfigurationError("experiment '" + name + "': no methods requested (valid: " +
                             valid_method_names() + ")");
  }
  if (num_elements == 0) throw ConfigurationError("experiment '" + name + "': num_elements must be >= 1");
  for (double a : true_angles) {
    if (!(a > 0.0 && a < 180.0)) throw ConfigurationError("experiment '" + name + "': angle outside (0, 180)");
  }
  for (double s : snr_grid) {
    if (!std::isfinite(s)) throw ConfigurationError("experiment '" + name + "': non-finite SNR");
  }
  try {
    const AngleGrid g = grid();
    if (g.size() <= true_angles.size()) {
      throw ConfigurationError("experiment '" + name + "': grid has too few points for Q peaks");
    }
    sparse.validate();
  } catch (const ConfigurationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigurationError("experiment '" + name + "': " + e.what());
  }
}

std::vector<double> default_snr_grid() {
  std::vector<double> g;
  for (int s = 0; s <= 40; ++s) g.push_back(s);
  return g;
}

std::vector<std::string> preset_names() {
  return {"single_120", "two_100_105", "three_60_90_95", "three_63_67_72"};
}

std::optional<ExperimentSpec> find_preset(std::string_view name) {
  ExperimentSpec spec;
  spec.name = std::string(name);
  spec.snr_grid = default_snr_grid();
  if (name == "single_120") {
    spec.true_angles = {120.0};
    spec.spectrum_snr_db = 25.0;
  } else if (name == "two_100_105") {
    spec.true_angles = {100.0, 105.0};
    spec.spectrum_snr_db = 25.0;
  } else if (name == "three_60_90_95") {
    spec.true_angles = {60.0, 90.0, 95.0};
    spec.spectrum_snr_db = 30.0;
  } else if (name == "three_63_67_72") {
    spec.true_angles = {63.0, 67.0, 72.0};
    spec.spectrum_snr_db = 30.0;
  } else {
    return std::nullopt;
  }
  return spec;
}

double rmse(std::span<const TrialRecord> trials) {
  std::vector<std::vector<double>> errs;
  errs.reserve(trials.size());
  for (const auto& t : trials) errs.push_back(t.errors);
  return rmse(std::span<const std::vector<double>>(errs));
}

std::vector<RmseRow> compute_rmse_table(std::span<const TrialRecord> records,
                                        std::span<const Method> methods,
                                        std::span<const double> snr_grid) {
  std::vector<RmseRow> table;
  for (Method m : methods) {
    for (double snr : snr_grid) {
      double sum = 0.0;
      std::size_t count = 0, trials = 0;
      for (const auto& r : records) {
        if (r.method != m || r.snr_db != snr) continue;
        for (double e : r.errors) sum += e * e;
        count += r.errors.size();
        ++trials;
      }
      if (trials == 0) continue;
      table.push_back({m, snr, std::sqrt(sum / static_cast<double>(count)), trials});
    }
  }
  return table;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const ModelParams* model) {
  spec.validate();
  const bool wants_net = std::find(spec.methods.begin(), spec.methods.end(), Method::sp2net) != spec.methods.end();
  const bool wants_sparse = std::find(spec.methods.begin(), spec.methods.end(), Method::sparse) != spec.methods.end();
  if (wants_net && model == nullptr) {
    throw ConfigurationError("method sp2net requires a trained model (none provided)");
  }
  const ArrayGeometry geom = make_ula(spec.num_elements);
  if (wants_net && model->input_width() != 4 * spec.num_elements + 1) {
    throw ConfigurationError("model input width does not match the array size");
  }

  const auto t_start = Clock::now();
  const AngleGrid grid = spec.grid();
  const BartlettScanner bartlett(geom, grid);
  std::unique_ptr<BpdnSolver> sparse;
  if (wants_sparse) sparse = std::make_unique<BpdnSolver>(bartlett.manifold(), spec.sparse);
  std::unique_ptr<NetScanner> net;
  if (wants_net) net = std::make_unique<NetScanner>(*model, geom, grid);

  std::vector<double> truth = spec.true_angles;
  std::sort(truth.begin(), truth.end());
  const std::size_t q = truth.size();

  // Representative realization.
  std::size_t flagged_snr = 0;
  for (std::size_t i = 1; i < spec.snr_grid.size(); ++i) {
    if (std::abs(spec.snr_grid[i] - spec.spectrum_snr_db) <
        std::abs(spec.snr_grid[flagged_snr] - spec.spectrum_snr_db)) {
      flagged_snr = i;
    }
  }

  const std::size_t n_methods = spec.methods.size();
  const std::size_t n_items = spec.snr_grid.size() * spec.trials_per_snr;
  std::vector<TrialRecord> slots(n_items * n_methods);
  std::vector<SpectrumDump> dumps;

  auto run_item = [&](std::size_t item) {
    const std::size_t si = item / spec.trials_per_snr;
    const std::size_t trial = item % spec.trials_per_snr;
    const double snr = spec.snr_grid[si];
    Rng rng = Rng(spec.seed, kBenchStreamBase + si).substream(trial);

    std::vector<Source> sources(q);
    for (std::size_t k = 0; k < q; ++k) {
      sources[k].theta_deg = spec.true_angles[k];
      sources[k].amplitude = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
    }
    const double sigma = sigma_from_snr_db(snr);
    const ComplexVector x = synthesize_snapshot(geom, sources, sigma, rng);
    const bool keep = si == flagged_snr && trial == 0;

    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      const Method method = spec.methods[mi];
      const auto t0 = Clock::now();
      Spectrum sp;
      switch (method) {
        case Method::bartlett: sp = bartlett.scan(x); break;
        case Method::sparse: sp = sparse_spectrum(sparse->solve(x, sigma), grid); break;
        case Method::sp2net: sp = net->scan(x, sigma); break;
      }
      const DoaEstimate est = find_peaks(sp, q);
      TrialRecord& rec = slots[item * n_methods + mi];
      rec.experiment = spec.name;
      rec.method = method;
      rec.snr_db = snr;
      rec.trial = trial;
      rec.estimated = est.angles;
      rec.errors = pair_and_error(est, truth);
      rec.wall_seconds = seconds_since(t0);
      if (keep) dumps.push_back({method, snr, trial, std::move(sp)});
    }
  };

  std::size_t threads = spec.threads != 0 ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n_items);
  // Only the flagged item writes `dumps`; run it up front so workers never
  // touch shared state.
  const std::size_t flagged_item = flagged_snr * spec.trials_per_snr;
  run_item(flagged_item);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t item = next++; item < n_items; item = next++) {
      if (item != flagged_item) run_item(item);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentResult res;
  res.spec = spec;
  res.records = std::move(slots);
  res.rmse_table = compute_rmse_table(res.records, spec.methods, spec.snr_grid);
  res.spectra = std::move(dumps);
  res.wall_seconds = seconds_since(t_start);
  return res;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw OutputError("cannot open '" + path.string() + "' for writing");
  os << content;
  os.close();
  if (!os) throw OutputError("error writing '" + path.string() + "'");
}

std::string join(std::span<const double> v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += num(v[i]);
  }
  return s;
}

}  // namespace

void emit_results(const ExperimentResult& result, const std::filesystem::path& dir) {
  const ExperimentSpec& spec = result.spec;
  spec.validate();
  if (result.records.empty()) throw ConfigurationError("emit_results: no trial records");

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create output directory '" + dir.string() + "': " + ec.message());

  std::string csv = "method,snr_db,rmse_deg,trials\n";
  for (const auto& row : result.rmse_table) {
    csv += std::string(method_name(row.method)) + ',' + num(row.snr_db) + ',' + num(row.rmse_deg) +
           ',' + std::to_string(row.trials) + '\n';
  }
  write_file(dir / "rmse_vs_snr.csv", csv);

  std::string trials = "experiment,method,snr_db,trial,estimated_deg,error_deg\n";
  for (const auto& r : result.records) {
    trials += r.experiment + ',' + std::string(method_name(r.method)) + ',' + num(r.snr_db) + ',' +
              std::to_string(r.trial) + ',' + join(r.estimated, ';') + ',' + join(r.errors, ';') + '\n';
  }
  write_file(dir / "trials.csv", trials);

  std::vector<double> truth = spec.true_angles;
  std::sort(truth.begin(), truth.end());
  nlohmann::json spectra_files = nlohmann::json::array();
  for (const auto& d : result.spectra) {
    const std::string fname = "spectrum_" + std::string(method_name(d.method)) + ".txt";
    std::ostringstream os;
    write_spectrum(os, d.spectrum,
                   "experiment=" + spec.name + " snr_db=" + num(d.snr_db) + " trial=" +
                       std::to_string(d.trial) + " true_angles=" + join(truth, ';'));
    write_file(dir / fname, os.str());
    spectra_files.push_back(fname);
  }

  double trial_seconds = 0.0;
  for (const auto& r : result.records) trial_seconds += r.wall_seconds;

  nlohmann::json methods = nlohmann::json::array();
  for (Method m : spec.methods) methods.push_back(std::string(method_name(m)));
  nlohmann::json manifest = {
      {"tool", "sp2net"},
      {"version", SP2NET_VERSION},
      {"experiment",
       {{"name", spec.name},
        {"true_angles_deg", spec.true_angles},
        {"snr_grid_db", spec.snr_grid},
        {"trials_per_snr", spec.trials_per_snr},
        {"methods", methods},
        {"grid", {{"start", spec.grid_start}, {"stop", spec.grid_stop}, {"step", spec.grid_step}}},
        {"seed", spec.seed},
        {"spectrum_snr_db", spec.spectrum_snr_db},
        {"num_elements", spec.num_elements}}},
      {"sparse",
       {{"c_bound", spec.sparse.c_bound},
        {"max_iterations", spec.sparse.max_iterations},
        {"primal_tol", spec.sparse.primal_tol},
        {"dual_tol", spec.sparse.dual_tol},
        {"penalty_rho", spec.sparse.penalty_rho},
        {"sigma_floor", spec.sparse.sigma_floor}}},
      {"outputs", {{"rmse", "rmse_vs_snr.csv"}, {"trials", "trials.csv"}, {"spectra", spectra_files}}},
      {"timing", {{"wall_seconds", result.wall_seconds}, {"sum_trial_seconds", trial_seconds}}},
  };
  const auto tmp = dir / "manifest.json.tmp";
  write_file(tmp, manifest.dump(2) + "\n");
  std::filesystem::rename(tmp, dir / "manifest.json", ec);
  if (ec) throw OutputError("cannot finalize manifest: " + ec.message());
}

}  // namespace sp2net
