#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sp2net {

/// Ordered set of scan angles in degrees. Uniform grids carry start/step;
/// irregular grids only guarantee strictly increasing angles.
class AngleGrid {
 public:
  /// start, start+step, ..., stop. (stop - start) must be a whole number
  /// of steps to within 1e-9 of a step.
  static AngleGrid uniform(double start, double stop, double step);
  static AngleGrid irregular(std::vector<double> angles);
  /// 45 to 135 degrees at 0.01 degree resolution.
  static AngleGrid default_fov();

  std::span<const double> angles() const { return angles_; }
  std::size_t size() const { return angles_.size(); }
  double operator[](std::size_t i) const { return angles_[i]; }
  bool is_uniform() const { return uniform_; }
  double start() const { return angles_.front(); }
  double stop() const { return angles_.back(); }
  /// Zero for irregular grids.
  double step() const { return step_; }

  /// Index of the grid angle closest to theta.
  std::size_t nearest_index(double theta) const;

 private:
  std::vector<double> angles_;
  double step_ = 0.0;
  bool uniform_ = false;
};

struct Spectrum {
  AngleGrid grid;
  std::vector<double> scores;
  std::string estimator;
};

struct DoaEstimate {
  std::vector<double> angles;  // ascending
  std::vector<double> scores;
  std::vector<std::size_t> indices;
};

/// The q highest local maxima of a spectrum on a uniform grid.
///
/// A local maximum is a sample (or the leftmost sample of a plateau of equal
/// values) strictly greater than its existing neighbours; endpoints compare
/// against their single neighbour. Ties in score go to the lower angle. If
/// fewer than q maxima exist, the remaining slots are filled with the
/// highest-scoring samples that are neither selected nor adjacent to a
/// selected sample.
///
/// Throws std::invalid_argument for q == 0, q >= grid size, grids shorter
/// than 3 samples, irregular grids or size mismatches.
DoaEstimate find_peaks(const Spectrum& spectrum, std::size_t q);

/// Sorts both lists and returns estimated_i - true_i.
std::vector<double> pair_and_error(const DoaEstimate& estimated, std::span<const double> true_angles);
std::vector<double> pair_and_error(std::span<const double> estimated, std::span<const double> true_angles);

/// sqrt of the mean squared error over every entry of every trial.
double rmse(std::span<const std::vector<double>> per_trial_errors);
double rmse(std::span<const double> errors);

/// Two-column text export: a '#' header line, then "angle score" rows.
void write_spectrum(std::ostream& os, const Spectrum& spectrum, const std::string& metadata = {});
Spectrum read_spectrum(std::istream& is);

}  // namespace sp2net
