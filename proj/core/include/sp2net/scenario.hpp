#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sp2net/array_model.hpp"
#include "sp2net/rng.hpp"

namespace sp2net {

/// Angular field of view in degrees.
struct FieldOfView {
  double lo = 45.0;
  double hi = 135.0;

  bool contains(double theta) const { return theta >= lo && theta <= hi; }
  double width() const { return hi - lo; }
};

struct Source {
  double theta_deg = 90.0;
  Complex amplitude{1.0, 0.0};
};

struct Scenario {
  std::vector<Source> sources;
  double sigma_v = 0.0;
  double snr_db = 0.0;
  ComplexVector snapshot;

  std::vector<double> sorted_angles() const;
};

/// Noise standard deviation for a given SNR of a unit-magnitude source,
/// SNR = |s|^2 / sigma_v^2.
double sigma_from_snr_db(double snr_db);

/// m i.i.d. CN(0, sigma_v^2) samples.
ComplexVector draw_noise(Rng& rng, std::size_t m, double sigma_v);

/// sum_q a(theta_q) s_q + v.
ComplexVector synthesize_snapshot(const ArrayGeometry& geom, std::span<const Source> sources,
                                  double sigma_v, Rng& rng);

/// One draw from the training distribution: Q ~ U{1,2,3}, angles U[45,135],
/// |s_1| = 1, |s_q| ~ U[0.5,1], phases U[0,2pi), SNR ~ U{0..40} dB.
Scenario sample_training_scenario(const ArrayGeometry& geom, Rng& rng);

// Line format, whitespace separated:
//   Q  theta_1..theta_Q  re(s_1) im(s_1) .. re(s_Q) im(s_Q)  sigma_v  re(x_1) im(x_1) ..
// snr_db is not stored; it is recovered as -20 log10(sigma_v).
std::string format_scenario_line(const Scenario& scenario);
Scenario parse_scenario_line(std::string_view line);

void write_scenarios(std::ostream& os, std::span<const Scenario> scenarios);
std::vector<Scenario> read_scenarios(std::istream& is);

}  // namespace sp2net
