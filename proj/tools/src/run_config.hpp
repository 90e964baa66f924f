#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sp2net/bench_harness.hpp"
#include "sp2net/sparse_bpdn.hpp"
#include "sp2net/training.hpp"

namespace sp2net::cli {

/// Bad key, bad value or malformed line in a configuration file or flag.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- sectioned key = value text ---------------------------------------------
//
//   # comment
//   seed = 7
//   [train]
//   learning_rate = 1e-3
//   [model]
//   hidden = [256, 256]
//   [experiment]
//   methods = ["bartlett", "sparse"]
//
// Values are integers, floats, booleans, double-quoted strings, or
// single-line arrays of those.

using Scalar = std::variant<bool, std::int64_t, double, std::string>;
using Value = std::variant<Scalar, std::vector<Scalar>>;

struct Entry {
  std::string key;  // "section.name", or "name" before any section
  Value value;
  int line = 0;
};

/// Throws ConfigError naming the line for syntax errors and duplicate keys.
std::vector<Entry> parse_config_text(std::istream& is, const std::string& source_name = "<config>");

// ---- typed configuration ----------------------------------------------------

struct ModelShape {
  std::size_t num_elements = 16;
  std::vector<std::uint32_t> hidden{256, 512, 1024, 2048, 2048, 2048, 2048};
  bool equal_width_skips = true;  // residual additions between equal-width neighbours

  Architecture architecture() const;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: available parallelism

  TrainConfig train;
  std::size_t target_elements = 64;
  ModelShape model;
  SparseConfig sparse;
  ExperimentSpec experiment;

  std::filesystem::path model_path;
  std::filesystem::path output_dir = "results";
  std::filesystem::path train_log;

  /// Applies entries over the current values. An experiment.preset key is
  /// applied before every other experiment key regardless of its position.
  void apply(const std::vector<Entry>& entries);
  /// Checks every component; throws ConfigError.
  void validate() const;
};

class ConfigFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Defaults overlaid with the file, if a path is given. An unreadable file
/// raises ConfigFileError.
RunConfig load_run_config(const std::filesystem::path& path);

/// Every recognised key with its default value, one per line, in file syntax.
std::string default_config_text();

/// Threads requested by the SP2NET_THREADS environment variable, 0 if unset.
std::size_t threads_from_env();

}  // namespace sp2net::cli
