#include "sp2net/array_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sp2net {

ArrayGeometry::ArrayGeometry(std::vector<double> positions)
    : positions_(std::move(positions)) {
  if (positions_.empty()) {
    throw std::invalid_argument("ArrayGeometry: at least one element required");
  }
  for (double p : positions_) {
    if (!std::isfinite(p)) {
      throw std::invalid_argument("ArrayGeometry: non-finite element position");
    }
  }
  const double mean = std::accumulate(positions_.begin(), positions_.end(), 0.0) /
                      static_cast<double>(positions_.size());
  if (std::abs(mean) > 1e-12) {
    throw std::invalid_argument("ArrayGeometry: positions must be centered, mean = " +
                                std::to_string(mean));
  }
}

ArrayGeometry make_ula(std::size_t num_elements) {
  if (num_elements == 0) {
    throw std::invalid_argument("make_ula: num_elements must be >= 1");
  }
  std::vector<double> pos(num_elements);
  const double center = 0.5 * static_cast<double>(num_elements - 1);
  for (std::size_t m = 0; m < num_elements; ++m) {
    // Exact in binary: (m - center) is a multiple of 1/2.
    pos[m] = 0.5 * (static_cast<double>(m) - center);
  }
  return ArrayGeometry(std::move(pos));
}

ComplexVector steering_vector(const ArrayGeometry& geom, double theta_deg) {
  if (!std::isfinite(theta_deg)) {
    throw std::invalid_argument("steering_vector: non-finite angle");
  }
  const auto pos = geom.positions();
  const double amp = 1.0 / std::sqrt(static_cast<double>(pos.size()));
  const double k_cos = (2.0 * kPi / geom.wavelength()) * std::cos(deg_to_rad(theta_deg));
  ComplexVector a(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t m = 0; m < pos.size(); ++m) {
    a[static_cast<Eigen::Index>(m)] = std::polar(amp, k_cos * pos[m]);
  }
  return a;
}

ComplexMatrix build_manifold_matrix(const ArrayGeometry& geom,
                                    std::span<const double> angles_deg) {
  ComplexMatrix A(static_cast<Eigen::Index>(geom.num_elements()),
                  static_cast<Eigen::Index>(angles_deg.size()));
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    A.col(static_cast<Eigen::Index>(i)) = steering_vector(geom, angles_deg[i]);
  }
  return A;
}

bool all_finite(const ComplexVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  }
  return true;
}

}  // namespace sp2net
