#pragma once

#include "sp2net/array_model.hpp"
#include "sp2net/neural_net.hpp"
#include "sp2net/spectrum.hpp"

namespace sp2net {

// Scores an arbitrary set of hypothesis angles with a trained model. The
// steering half of each input column is computed once per grid.
class NetScanner {
 public:
  NetScanner(const ModelParams& model, const ArrayGeometry& geom, AngleGrid grid);

  Spectrum scan(const ComplexVector& snapshot, double sigma_v) const;

  const AngleGrid& grid() const { return grid_; }

 private:
  const ModelParams* model_;
  std::size_t num_elements_;
  AngleGrid grid_;
  Matrix steering_rows_;  // 2M x N: Re a / Im a per grid angle
};

Spectrum net_spectrum(const ModelParams& model, const ArrayGeometry& geom,
                      const ComplexVector& snapshot, double sigma_v, const AngleGrid& grid);

}  // namespace sp2net
