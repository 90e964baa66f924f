#include "sp2net/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace sp2net {

namespace {

std::size_t input_width_for(std::size_t num_elements) { return 4 * num_elements + 1; }

double sigmoid(double z) {
  double y;
  if (z >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    y = e / (1.0 + e);
  }
  // Keep the output inside the open interval even when exp saturates.
  constexpr double kHi = 1.0 - 0x1.0p-53;
  return std::clamp(y, std::numeric_limits<double>::min(), kHi);
}

bool bits_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool bits_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

// Activations of one forward block, kept for backpropagation.
struct ForwardTrace {
  std::vector<Matrix> acts;  // acts[0] = input, acts[L] = output
  std::vector<Matrix> pre;   // pre-activation of each layer
};

void run_forward(const ModelParams& p, const Matrix& input, ForwardTrace& tr) {
  const std::size_t L = p.num_layers();
  tr.acts.resize(L + 1);
  tr.pre.resize(L);
  tr.acts[0] = input;
  for (std::size_t l = 0; l < L; ++l) {
    Matrix& z = tr.pre[l];
    z.noalias() = p.weights[l] * tr.acts[l];
    z.colwise() += p.biases[l];
    Matrix& h = tr.acts[l + 1];
    if (l + 1 == L) {
      h = z.unaryExpr([](double v) { return sigmoid(v); });
    } else {
      h = z.cwiseMax(0.0);
      for (const auto& sk : p.skip_pairs) {
        if (sk.target == l + 1) h += tr.acts[sk.source];
      }
    }
  }
}

}  // namespace

std::vector<SkipPair> consecutive_equal_width_skips(std::span<const std::uint32_t> dims) {
  std::vector<SkipPair> out;
  // Hidden activations are 1 .. dims.size() - 2.
  for (std::size_t t = 2; t + 1 < dims.size(); ++t) {
    if (dims[t] == dims[t - 1]) {
      out.push_back({static_cast<std::uint32_t>(t - 1), static_cast<std::uint32_t>(t)});
    }
  }
  return out;
}

Architecture make_architecture(std::size_t num_elements, std::span<const std::uint32_t> hidden,
                               std::vector<SkipPair> skips) {
  Architecture arch;
  arch.layer_dims.push_back(static_cast<std::uint32_t>(input_width_for(num_elements)));
  arch.layer_dims.insert(arch.layer_dims.end(), hidden.begin(), hidden.end());
  arch.layer_dims.push_back(1);
  arch.skip_pairs = std::move(skips);
  return arch;
}

Architecture default_architecture(std::size_t num_elements) {
  const std::vector<std::uint32_t> hidden{256, 512, 1024, 2048, 2048, 2048, 2048};
  Architecture arch = make_architecture(num_elements, hidden, {});
  arch.skip_pairs = consecutive_equal_width_skips(arch.layer_dims);
  return arch;
}

ModelParams ModelParams::zeros(std::size_t num_elements, const Architecture& arch) {
  ModelParams p;
  p.num_elements = static_cast<std::uint32_t>(num_elements);
  p.layer_dims = arch.layer_dims;
  p.skip_pairs = arch.skip_pairs;
  for (std::size_t l = 0; l + 1 < arch.layer_dims.size(); ++l) {
    p.weights.push_back(Matrix::Zero(arch.layer_dims[l + 1], arch.layer_dims[l]));
    p.biases.push_back(Vector::Zero(arch.layer_dims[l + 1]));
  }
  p.validate();
  return p;
}

void ModelParams::validate() const {
  if (layer_dims.size() < 2) throw std::invalid_argument("model: need at least input and output widths");
  if (num_elements == 0) throw std::invalid_argument("model: num_elements must be > 0");
  if (layer_dims.front() != input_width_for(num_elements)) {
    throw std::invalid_argument("model: input width " + std::to_string(layer_dims.front()) +
                                " != 4M+1 = " + std::to_string(input_width_for(num_elements)));
  }
  if (layer_dims.back() != 1) throw std::invalid_argument("model: output width must be 1");
  for (auto d : layer_dims) {
    if (d == 0) throw std::invalid_argument("model: zero layer width");
  }
  const std::size_t L = layer_dims.size() - 1;
  if (weights.size() != L || biases.size() != L) {
    throw std::invalid_argument("model: weight/bias count does not match layer count");
  }
  for (std::size_t l = 0; l < L; ++l) {
    if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
        biases[l].size() != layer_dims[l + 1]) {
      throw std::invalid_argument("model: layer " + std::to_string(l) + " shape mismatch");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw std::invalid_argument("model: layer " + std::to_string(l) + " has non-finite parameters");
    }
  }
  for (const auto& sk : skip_pairs) {
    if (sk.source == 0 || sk.source >= sk.target || sk.target >= L) {
      throw std::invalid_argument("model: skip pair (" + std::to_string(sk.source) + "," +
                                  std::to_string(sk.target) + ") must join hidden layers forward");
    }
    if (layer_dims[sk.source] != layer_dims[sk.target]) {
      throw std::invalid_argument("model: skip pair joins layers of different width");
    }
  }
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

bool bitwise_equal(const ModelParams& a, const ModelParams& b) {
  if (a.num_elements != b.num_elements || a.layer_dims != b.layer_dims ||
      a.skip_pairs != b.skip_pairs || a.weights.size() != b.weights.size() ||
      a.biases.size() != b.biases.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (!bits_equal(a.weights[l], b.weights[l]) || !bits_equal(a.biases[l], b.biases[l])) return false;
  }
  return true;
}

ModelParams initialize_model(std::size_t num_elements, const Architecture& arch, Rng& rng) {
  ModelParams p = ModelParams::zeros(num_elements, arch);
  const std::size_t L = p.num_layers();
  for (std::size_t l = 0; l < L; ++l) {
    const double bound =
        l + 1 == L ? 1e-3 : std::sqrt(6.0 / static_cast<double>(p.layer_dims[l]));
    Matrix& w = p.weights[l];
    // Row-major fill order so the stream does not depend on storage order.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    }
  }
  return p;
}

void encode_into(const ComplexVector& snapshot, const ComplexVector& steering, double sigma_v,
                 Eigen::Ref<Vector> column) {
  const Eigen::Index m = snapshot.size();
  if (steering.size() != m) throw std::invalid_argument("encode_input: snapshot/steering length mismatch");
  if (column.size() != 4 * m + 1) throw std::invalid_argument("encode_input: output column has wrong length");
  column.segment(0, m) = snapshot.real();
  column.segment(m, m) = snapshot.imag();
  column.segment(2 * m, m) = steering.real();
  column.segment(3 * m, m) = steering.imag();
  column[4 * m] = sigma_v;
}

NetInput encode_input(const ComplexVector& snapshot, const ComplexVector& steering, double sigma_v) {
  NetInput in;
  in.values.resize(4 * snapshot.size() + 1);
  encode_into(snapshot, steering, sigma_v, in.values);
  return in;
}

Vector forward_batch(const ModelParams& params, const Matrix& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != params.input_width() || params.num_layers() == 0) {
    throw std::invalid_argument("forward: input width " + std::to_string(inputs.rows()) +
                                " does not match model input width " +
                                std::to_string(params.input_width()));
  }
  const Eigen::Index n = inputs.cols();
  Vector out(n);
  Matrix block = Matrix::Zero(inputs.rows(), kForwardBlock);
  ForwardTrace tr;
  for (Eigen::Index start = 0; start < n; start += kForwardBlock) {
    const Eigen::Index len = std::min(kForwardBlock, n - start);
    block.leftCols(len) = inputs.middleCols(start, len);
    if (len < kForwardBlock) block.rightCols(kForwardBlock - len).setZero();
    run_forward(params, block, tr);
    out.segment(start, len) = tr.acts.back().row(0).head(len).transpose();
  }
  return out;
}

double forward(const ModelParams& params, const NetInput& input) {
  return forward_batch(params, input.values)[0];
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    g.weights.push_back(Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
    g.biases.push_back(Vector::Zero(params.biases[l].size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.weights.size() != weights.size()) throw std::invalid_argument("Gradients: layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= s;
    biases[l] *= s;
  }
  return *this;
}

std::string Gradients::first_non_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite()) return "weights of layer " + std::to_string(l);
    if (!biases[l].allFinite()) return "biases of layer " + std::to_string(l);
  }
  return {};
}

namespace {

// One zero-padded block; padding columns carry zero weight.
double backprop_block(const ModelParams& params, const Matrix& block, const Eigen::RowVectorXd& t,
                      const Eigen::RowVectorXd& w, ForwardTrace& tr, Gradients& grad) {
  const Eigen::Index n = block.cols();
  run_forward(params, block, tr);
  const std::size_t L = params.num_layers();
  const Eigen::RowVectorXd y = tr.acts[L].row(0);
  const Eigen::RowVectorXd diff = y - t;
  const double loss = (w.array() * diff.array().square()).sum();

  // d/dz of w (sigmoid(z) - t)^2
  Matrix dz = (2.0 * w.array() * diff.array() * y.array() * (1.0 - y.array())).matrix();

  std::vector<Matrix> gact(L);  // gradient w.r.t. hidden activations 1..L-1
  for (std::size_t a = 1; a < L; ++a) gact[a] = Matrix::Zero(params.layer_dims[a], n);

  for (std::size_t l = L; l-- > 0;) {
    if (l + 1 < L) {
      const std::size_t a = l + 1;
      // gact[a] is complete here: its consumers (layer a and skip targets
      // beyond a) have already been visited.
      for (const auto& sk : params.skip_pairs) {
        if (sk.target == a) gact[sk.source] += gact[a];
      }
      dz = gact[a].cwiseProduct((tr.pre[l].array() > 0.0).cast<double>().matrix());
    }
    grad.weights[l].noalias() += dz * tr.acts[l].transpose();
    grad.biases[l] += dz.rowwise().sum();
    if (l > 0) gact[l].noalias() += params.weights[l].transpose() * dz;
  }
  return loss;
}

}  // namespace

double accumulate_gradients(const ModelParams& params, const Matrix& inputs,
                            std::span<const double> targets, std::span<const double> weights,
                            Gradients& grad) {
  const Eigen::Index n = inputs.cols();
  if (static_cast<std::size_t>(inputs.rows()) != params.input_width()) {
    throw std::invalid_argument("backward: input width does not match model");
  }
  if (targets.size() != static_cast<std::size_t>(n) || weights.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("backward: targets/weights length != batch size");
  }
  if (grad.weights.size() != params.num_layers()) grad = Gradients::zeros_like(params);

  Matrix block = Matrix::Zero(inputs.rows(), kForwardBlock);
  Eigen::RowVectorXd t = Eigen::RowVectorXd::Zero(kForwardBlock);
  Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(kForwardBlock);
  ForwardTrace tr;
  double loss = 0.0;
  for (Eigen::Index start = 0; start < n; start += kForwardBlock) {
    const Eigen::Index len = std::min(kForwardBlock, n - start);
    block.leftCols(len) = inputs.middleCols(start, len);
    for (Eigen::Index i = 0; i < len; ++i) {
      t[i] = targets[static_cast<std::size_t>(start + i)];
      w[i] = weights[static_cast<std::size_t>(start + i)];
    }
    if (len < kForwardBlock) {
      block.rightCols(kForwardBlock - len).setZero();
      t.tail(kForwardBlock - len).setZero();
      w.tail(kForwardBlock - len).setZero();
    }
    loss += backprop_block(params, block, t, w, tr, grad);
  }
  return loss;
}

Gradients backward(const ModelParams& params, const NetInput& input, double target, double weight) {
  if (!(target >= 0.0 && target <= 1.0)) throw std::invalid_argument("backward: target must be in [0, 1]");
  if (!(weight >= 0.0)) throw std::invalid_argument("backward: weight must be >= 0");
  Gradients g = Gradients::zeros_like(params);
  const double t[1] = {target};
  const double w[1] = {weight};
  accumulate_gradients(params, input.values, t, w, g);
  return g;
}

AdamState AdamState::for_model(const ModelParams& params, double learning_rate) {
  AdamState st;
  st.learning_rate = learning_rate;
  st.first_moment = Gradients::zeros_like(params);
  st.second_moment = Gradients::zeros_like(params);
  return st;
}

void adam_step(ModelParams& params, AdamState& st, const Gradients& grad) {
  const std::size_t L = params.num_layers();
  if (grad.weights.size() != L || st.first_moment.weights.size() != L) {
    throw std::invalid_argument("adam_step: layer count mismatch");
  }
  for (std::size_t l = 0; l < L; ++l) {
    if (grad.weights[l].rows() != params.weights[l].rows() ||
        grad.weights[l].cols() != params.weights[l].cols() ||
        grad.biases[l].size() != params.biases[l].size()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch at layer " + std::to_string(l));
    }
  }
  if (auto bad = grad.first_non_finite(); !bad.empty()) {
    throw std::domain_error("adam_step: non-finite gradient in " + bad + " at step " +
                            std::to_string(st.step_count + 1));
  }

  st.step_count += 1;
  const double b1 = st.beta1, b2 = st.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step_count));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step_count));
  const double lr = st.learning_rate;
  const double eps = st.epsilon;

  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < L; ++l) {
    update(params.weights[l], st.first_moment.weights[l], st.second_moment.weights[l], grad.weights[l]);
    update(params.biases[l], st.first_moment.biases[l], st.second_moment.biases[l], grad.biases[l]);
  }
}

}  // namespace sp2net
