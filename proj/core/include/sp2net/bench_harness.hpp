#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sp2net/neural_net.hpp"
#include "sp2net/sparse_bpdn.hpp"
#include "sp2net/spectrum.hpp"

namespace sp2net {

enum class Method { bartlett, sparse, sp2net };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
/// "bartlett, sparse, sp2net"
std::string valid_method_names();

class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentSpec {
  std::string name = "custom";
  std::vector<double> true_angles;
  std::vector<double> snr_grid;  // dB
  std::size_t trials_per_snr = 500;
  std::vector<Method> methods{Method::bartlett, Method::sparse, Method::sp2net};
  double grid_start = 45.0;
  double grid_stop = 135.0;
  double grid_step = 0.01;
  std::uint64_t seed = 1;
  /// The first trial at the grid SNR nearest this value is kept as the
  /// representative realization whose spectra are dumped.
  double spectrum_snr_db = 25.0;
  std::size_t num_elements = 16;
  SparseConfig sparse;
  std::size_t threads = 0;  // 0: hardware concurrency

  AngleGrid grid() const;
  /// Throws ConfigurationError.
  void validate() const;
};

std::vector<double> default_snr_grid();  // 0, 1, ..., 40
std::vector<std::string> preset_names();
/// single_120, two_100_105, three_60_90_95, three_63_67_72.
std::optional<ExperimentSpec> find_preset(std::string_view name);

struct TrialRecord {
  std::string experiment;
  Method method = Method::bartlett;
  double snr_db = 0.0;
  std::size_t trial = 0;
  std::vector<double> estimated;  // ascending
  std::vector<double> errors;     // estimated - true after sorting both
  double wall_seconds = 0.0;
};

double rmse(std::span<const TrialRecord> trials);

struct RmseRow {
  Method method = Method::bartlett;
  double snr_db = 0.0;
  double rmse_deg = 0.0;
  std::size_t trials = 0;
};

struct SpectrumDump {
  Method method = Method::bartlett;
  double snr_db = 0.0;
  std::size_t trial = 0;
  Spectrum spectrum;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<TrialRecord> records;  // ordered by (snr index, trial, method)
  std::vector<RmseRow> rmse_table;   // ordered by (method, snr index)
  std::vector<SpectrumDump> spectra;
  double wall_seconds = 0.0;
};

/// Per (method, SNR) RMSE, grouped in the order of `methods` and `snr_grid`.
std::vector<RmseRow> compute_rmse_table(std::span<const TrialRecord> records,
                                        std::span<const Method> methods,
                                        std::span<const double> snr_grid);

/// Monte-Carlo run: for every SNR and trial, one snapshot with unit-magnitude
/// random-phase sources feeds every requested method; each spectrum's Q
/// highest peaks are paired against the true angles. Trial randomness is
/// keyed by (seed, SNR index, trial), so thread count does not affect results.
/// Throws ConfigurationError before any trial if sp2net is requested without
/// a model.
ExperimentResult run_experiment(const ExperimentSpec& spec, const ModelParams* model);

/// Writes rmse_vs_snr.csv, trials.csv, one spectrum file per method for the
/// representative realization, and manifest.json (written last, atomically).
/// Throws OutputError when the directory cannot be written.
void emit_results(const ExperimentResult& result, const std::filesystem::path& output_dir);

}  // namespace sp2net
