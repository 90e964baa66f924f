#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "sp2net/neural_net.hpp"

namespace sp2net {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'P', '2', 'N'};
// Refuse headers that would allocate absurd amounts of memory.
constexpr std::uint32_t kMaxWidth = 1u << 20;
constexpr std::uint32_t kMaxLayers = 4096;
constexpr std::uint64_t kMaxParams = 1ull << 31;

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

void put_f64(std::ostream& os, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw ModelFormatError(std::string("model file truncated while reading ") + what);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void get_f64_block(std::istream& is, double* dst, std::size_t count, const std::string& what) {
  std::vector<unsigned char> buf(count * 8);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw ModelFormatError("model file truncated while reading " + what);
  }
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[8 * k + i]) << (8 * i);
    dst[k] = std::bit_cast<double>(v);
  }
}

ModelHeader read_header(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4)) throw ModelFormatError("model file truncated: missing magic");
  if (magic != kMagic) throw ModelFormatError("not a model file: magic mismatch");
  ModelHeader h;
  h.version = get_u32(is, "version");
  if (h.version != kModelFormatVersion) {
    throw ModelFormatError("unsupported model format version " + std::to_string(h.version));
  }
  h.num_elements = get_u32(is, "element count");
  const std::uint32_t n_dims = get_u32(is, "layer count");
  if (n_dims < 2 || n_dims > kMaxLayers) {
    throw ModelFormatError("model header: implausible layer count " + std::to_string(n_dims));
  }
  h.layer_dims.resize(n_dims);
  for (auto& d : h.layer_dims) {
    d = get_u32(is, "layer dims");
    if (d == 0 || d > kMaxWidth) throw ModelFormatError("model header: implausible layer width");
  }
  const std::uint32_t n_skip = get_u32(is, "skip count");
  if (n_skip > kMaxLayers) throw ModelFormatError("model header: implausible skip count");
  h.skip_pairs.resize(n_skip);
  for (auto& sk : h.skip_pairs) {
    sk.source = get_u32(is, "skip pairs");
    sk.target = get_u32(is, "skip pairs");
  }
  if (static_cast<std::uint64_t>(h.layer_dims.front()) != 4ull * h.num_elements + 1) {
    throw ModelFormatError("model header: input width " + std::to_string(h.layer_dims.front()) +
                           " inconsistent with M = " + std::to_string(h.num_elements));
  }
  std::uint64_t total = 0;
  for (std::size_t l = 0; l + 1 < h.layer_dims.size(); ++l) {
    total += static_cast<std::uint64_t>(h.layer_dims[l]) * h.layer_dims[l + 1] + h.layer_dims[l + 1];
  }
  if (total > kMaxParams) throw ModelFormatError("model header: parameter count too large");
  return h;
}

}  // namespace

void write_model(std::ostream& os, const ModelParams& p) {
  p.validate();
  os.write(kMagic.data(), 4);
  put_u32(os, kModelFormatVersion);
  put_u32(os, p.num_elements);
  put_u32(os, static_cast<std::uint32_t>(p.layer_dims.size()));
  for (auto d : p.layer_dims) put_u32(os, d);
  put_u32(os, static_cast<std::uint32_t>(p.skip_pairs.size()));
  for (const auto& sk : p.skip_pairs) {
    put_u32(os, sk.source);
    put_u32(os, sk.target);
  }
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const Matrix& w = p.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(os, w(r, c));
    }
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) put_f64(os, p.biases[l][i]);
  }
  if (!os) throw std::runtime_error("write_model: stream error");
}

ModelParams read_model(std::istream& is) {
  const ModelHeader h = read_header(is);
  ModelParams p;
  p.num_elements = h.num_elements;
  p.layer_dims = h.layer_dims;
  p.skip_pairs = h.skip_pairs;
  for (std::size_t l = 0; l + 1 < h.layer_dims.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(h.layer_dims[l + 1]);
    const auto cols = static_cast<Eigen::Index>(h.layer_dims[l]);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(rows, cols);
    get_f64_block(is, w.data(), static_cast<std::size_t>(w.size()), "weights of layer " + std::to_string(l));
    Vector b(rows);
    get_f64_block(is, b.data(), static_cast<std::size_t>(b.size()), "biases of layer " + std::to_string(l));
    p.weights.emplace_back(w);
    p.biases.push_back(std::move(b));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw ModelFormatError("model file longer than its header declares");
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string("invalid model: ") + e.what());
  }
  return p;
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_model(os, params);
  os.close();
  if (!os) throw std::runtime_error("error writing '" + path.string() + "'");
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ModelFormatError("cannot open model file '" + path.string() + "'");
  return read_model(is);
}

ModelHeader read_model_header(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ModelFormatError("cannot open model file '" + path.string() + "'");
  return read_header(is);
}

}  // namespace sp2net
