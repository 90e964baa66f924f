#pragma once

#include "sp2net/array_model.hpp"
#include "sp2net/spectrum.hpp"

namespace sp2net {

// Bartlett (delay-and-sum) spectrum |a^H(theta) x|^2.
//
// The scanner keeps the manifold matrix for one grid so repeated scans over
// many snapshots share it.
class BartlettScanner {
 public:
  BartlettScanner(const ArrayGeometry& geom, AngleGrid grid);

  Spectrum scan(const ComplexVector& snapshot) const;

  const AngleGrid& grid() const { return grid_; }
  const ComplexMatrix& manifold() const { return manifold_; }

 private:
  AngleGrid grid_;
  ComplexMatrix manifold_;
};

Spectrum bartlett_spectrum(const ArrayGeometry& geom, const ComplexVector& snapshot,
                           const AngleGrid& grid);

}  // namespace sp2net
