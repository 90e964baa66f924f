#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sp2net/array_model.hpp"
#include "sp2net/rng.hpp"

namespace sp2net {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Residual addition of activation `source` onto activation `target`.
/// Activation 0 is the network input, activation L the output.
struct SkipPair {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  friend bool operator==(const SkipPair&, const SkipPair&) = default;
};

struct Architecture {
  std::vector<std::uint32_t> layer_dims;  // input width ... 1
  std::vector<SkipPair> skip_pairs;
};

/// Skip pairs between every two consecutive hidden activations of equal width.
std::vector<SkipPair> consecutive_equal_width_skips(std::span<const std::uint32_t> layer_dims);

/// 4M+1 -> 256 -> 512 -> 1024 -> 2048 -> 2048 -> 2048 -> 2048 -> 1, with
/// residual additions between the consecutive 2048-wide layers.
Architecture default_architecture(std::size_t num_elements);

/// 4M+1 -> hidden... -> 1 with the given skips.
Architecture make_architecture(std::size_t num_elements, std::span<const std::uint32_t> hidden,
                               std::vector<SkipPair> skips);

struct ModelParams {
  std::uint32_t num_elements = 0;  // M
  std::vector<std::uint32_t> layer_dims;
  std::vector<SkipPair> skip_pairs;
  std::vector<Matrix> weights;  // weights[l] is layer_dims[l+1] x layer_dims[l]
  std::vector<Vector> biases;

  /// All-zero parameters for the given architecture.
  static ModelParams zeros(std::size_t num_elements, const Architecture& arch);

  /// Throws std::invalid_argument describing the first broken invariant.
  void validate() const;

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_width() const { return layer_dims.empty() ? 0 : layer_dims.front(); }
  std::size_t parameter_count() const;
  Architecture architecture() const { return {layer_dims, skip_pairs}; }
};

/// Same architecture and bit-identical parameter values.
bool bitwise_equal(const ModelParams& a, const ModelParams& b);

/// He-uniform hidden layers (bound sqrt(6 / fan_in)), zero biases, and an
/// output layer drawn from U[-1e-3, 1e-3].
ModelParams initialize_model(std::size_t num_elements, const Architecture& arch, Rng& rng);

/// Network input [Re x | Im x | Re a | Im a | sigma_v], length 4M+1.
struct NetInput {
  Vector values;

  std::size_t num_elements() const { return static_cast<std::size_t>(values.size() - 1) / 4; }
  double sigma_v() const { return values[values.size() - 1]; }
};

NetInput encode_input(const ComplexVector& snapshot, const ComplexVector& steering, double sigma_v);

/// Writes the encoding into a preallocated column of length 4M+1.
void encode_into(const ComplexVector& snapshot, const ComplexVector& steering, double sigma_v,
                 Eigen::Ref<Vector> column);

/// Columns per forward evaluation block. Every forward pass, single or
/// batched, runs through blocks of exactly this many columns, which keeps
/// each column's result independent of batch composition.
inline constexpr Eigen::Index kForwardBlock = 64;

double forward(const ModelParams& params, const NetInput& input);

/// One score per input column.
Vector forward_batch(const ModelParams& params, const Matrix& inputs);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static Gradients zeros_like(const ModelParams& params);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  /// Empty when everything is finite, otherwise names the offending tensor.
  std::string first_non_finite() const;
};

/// Gradient of weight * (forward(input) - target)^2.
Gradients backward(const ModelParams& params, const NetInput& input, double target, double weight);

/// Adds the gradient of sum_i w_i (y_i - t_i)^2 over the columns of
/// `inputs` into `grad` and returns that sum.
double accumulate_gradients(const ModelParams& params, const Matrix& inputs,
                            std::span<const double> targets, std::span<const double> weights,
                            Gradients& grad);

struct AdamState {
  std::uint64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Gradients first_moment;
  Gradients second_moment;

  static AdamState for_model(const ModelParams& params, double learning_rate = 1e-3);
};

/// Bias-corrected Adam update. Throws std::domain_error, leaving params and
/// state untouched, if any gradient entry is non-finite.
void adam_step(ModelParams& params, AdamState& state, const Gradients& grad);

// ---- persistence -----------------------------------------------------------

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelHeader {
  std::uint32_t version = 0;
  std::uint32_t num_elements = 0;
  std::vector<std::uint32_t> layer_dims;
  std::vector<SkipPair> skip_pairs;
};

// "SP2N", version, M, layer count, layer dims, skip count, skip pairs (all
// u32 LE), then per layer the row-major weights followed by the biases as
// f64 LE.
void write_model(std::ostream& os, const ModelParams& params);
ModelParams read_model(std::istream& is);
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);
ModelHeader read_model_header(const std::filesystem::path& path);

}  // namespace sp2net
