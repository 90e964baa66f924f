#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace sp2net::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kRuntime = 3, kIo = 4 };

/// Command-line misuse detected after flag parsing (missing model, bad
/// combination of options).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainOptions {
  RunConfig config;
  std::filesystem::path output_model;
};

/// Trains, writes the best model and the log. Returns kRuntime when training
/// aborts on a non-finite loss, after saving the last good parameters.
int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err);

struct SpectrumOptions {
  std::string method;
  std::vector<double> angles;          // inline scenario
  std::optional<double> snr_db;
  std::optional<double> sigma_v;
  std::filesystem::path scenario_file;  // alternative to inline angles
  std::size_t scenario_index = 0;
  std::size_t num_elements = 16;
  double grid_start = 45.0;
  double grid_stop = 135.0;
  double grid_step = 0.01;
  std::filesystem::path model_path;
  std::size_t num_peaks = 0;  // 0: do not print peaks
  std::filesystem::path output = "spectrum.txt";
  std::uint64_t seed = 1;
  SparseConfig sparse;
};

int cmd_spectrum(const SpectrumOptions& opt, std::ostream& out, std::ostream& err);

struct BenchmarkOptions {
  RunConfig config;
};

int cmd_benchmark(const BenchmarkOptions& opt, std::ostream& out, std::ostream& err);

int cmd_model_info(const std::filesystem::path& model_path, std::ostream& out);

/// Runs `fn`, mapping exceptions to exit codes and printing them to `err`.
int guarded(const std::function<int()>& fn, std::ostream& err);

}  // namespace sp2net::cli
