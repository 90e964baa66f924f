#include "sp2net/inference.hpp"

#include <stdexcept>

namespace sp2net {

NetScanner::NetScanner(const ModelParams& model, const ArrayGeometry& geom, AngleGrid grid)
    : model_(&model), num_elements_(geom.num_elements()), grid_(std::move(grid)) {
  model.validate();
  if (model.input_width() != 4 * num_elements_ + 1) {
    throw std::invalid_argument("net_spectrum: model input width does not match 4M+1 for the array");
  }
  const auto m = static_cast<Eigen::Index>(num_elements_);
  steering_rows_.resize(2 * m, static_cast<Eigen::Index>(grid_.size()));
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const ComplexVector a = steering_vector(geom, grid_[i]);
    const auto col = static_cast<Eigen::Index>(i);
    steering_rows_.col(col).head(m) = a.real();
    steering_rows_.col(col).tail(m) = a.imag();
  }
}

Spectrum NetScanner::scan(const ComplexVector& snapshot, double sigma_v) const {
  const auto m = static_cast<Eigen::Index>(num_elements_);
  if (snapshot.size() != m) throw std::invalid_argument("net_spectrum: snapshot length != M");
  const auto n = static_cast<Eigen::Index>(grid_.size());
  Matrix inputs(4 * m + 1, n);
  inputs.topRows(m).colwise() = snapshot.real();
  inputs.middleRows(m, m).colwise() = snapshot.imag();
  inputs.middleRows(2 * m, 2 * m) = steering_rows_;
  inputs.row(4 * m).setConstant(sigma_v);
  const Vector y = forward_batch(*model_, inputs);
  return Spectrum{grid_, std::vector<double>(y.data(), y.data() + y.size()), "sp2net"};
}

Spectrum net_spectrum(const ModelParams& model, const ArrayGeometry& geom,
                      const ComplexVector& snapshot, double sigma_v, const AngleGrid& grid) {
  return NetScanner(model, geom, grid).scan(snapshot, sigma_v);
}

}  // namespace sp2net
