#include "sp2net/bartlett.hpp"

#include <stdexcept>

namespace sp2net {

BartlettScanner::BartlettScanner(const ArrayGeometry& geom, AngleGrid grid)
    : grid_(std::move(grid)), manifold_(build_manifold_matrix(geom, grid_.angles())) {}

Spectrum BartlettScanner::scan(const ComplexVector& snapshot) const {
  if (snapshot.size() != manifold_.rows()) {
    throw std::invalid_argument("bartlett: snapshot length does not match array size");
  }
  const Eigen::VectorXcd beams = manifold_.adjoint() * snapshot;
  Spectrum out{grid_, std::vector<double>(static_cast<std::size_t>(beams.size())), "bartlett"};
  for (Eigen::Index i = 0; i < beams.size(); ++i) {
    out.scores[static_cast<std::size_t>(i)] = std::norm(beams[i]);
  }
  return out;
}

Spectrum bartlett_spectrum(const ArrayGeometry& geom, const ComplexVector& snapshot,
                           const AngleGrid& grid) {
  if (static_cast<std::size_t>(snapshot.size()) != geom.num_elements()) {
    throw std::invalid_argument("bartlett: snapshot length does not match array size");
  }
  return BartlettScanner(geom, grid).scan(snapshot);
}

}  // namespace sp2net
