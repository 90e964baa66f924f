#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sp2net {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

/// Linear array with element positions expressed in wavelengths, measured
/// from the array center. The wavelength itself is fixed to 1.
class ArrayGeometry {
 public:
  /// Throws std::invalid_argument if `positions` is empty, non-finite or
  /// not centered (|mean| > 1e-12).
  explicit ArrayGeometry(std::vector<double> positions);

  std::size_t num_elements() const { return positions_.size(); }
  std::span<const double> positions() const { return positions_; }
  double wavelength() const { return 1.0; }

 private:
  std::vector<double> positions_;
};

/// Centered uniform linear array with half-wavelength spacing.
ArrayGeometry make_ula(std::size_t num_elements);

/// Unit-norm array response for a far-field source at `theta_deg`, with
/// the angle measured from the array axis (boresight is 90 degrees).
ComplexVector steering_vector(const ArrayGeometry& geom, double theta_deg);

/// Steering vectors stacked column-wise, one column per angle.
ComplexMatrix build_manifold_matrix(const ArrayGeometry& geom,
                                    std::span<const double> angles_deg);

bool all_finite(const ComplexVector& v);

}  // namespace sp2net
