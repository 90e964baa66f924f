#include "sp2net/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sp2net {

AngleGrid AngleGrid::uniform(double start, double stop, double step) {
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step) || step <= 0.0) {
    throw std::invalid_argument("AngleGrid::uniform: need finite start/stop and step > 0");
  }
  if (stop < start) throw std::invalid_argument("AngleGrid::uniform: stop < start");
  const double steps = (stop - start) / step;
  const double n_steps = std::round(steps);
  if (std::abs(steps - n_steps) > 1e-9 * std::max(1.0, n_steps)) {
    throw std::invalid_argument("AngleGrid::uniform: (stop - start) is not a multiple of step");
  }
  AngleGrid g;
  const auto n = static_cast<std::size_t>(n_steps) + 1;
  g.angles_.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.angles_[i] = start + static_cast<double>(i) * step;
  g.step_ = step;
  g.uniform_ = true;
  return g;
}

AngleGrid AngleGrid::irregular(std::vector<double> angles) {
  if (angles.empty()) throw std::invalid_argument("AngleGrid::irregular: empty angle list");
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (!std::isfinite(angles[i])) throw std::invalid_argument("AngleGrid::irregular: non-finite angle");
    if (i > 0 && !(angles[i] > angles[i - 1])) {
      throw std::invalid_argument("AngleGrid::irregular: angles must be strictly increasing");
    }
  }
  AngleGrid g;
  g.angles_ = std::move(angles);
  return g;
}

AngleGrid AngleGrid::default_fov() { return uniform(45.0, 135.0, 0.01); }

std::size_t AngleGrid::nearest_index(double theta) const {
  auto it = std::lower_bound(angles_.begin(), angles_.end(), theta);
  if (it == angles_.begin()) return 0;
  if (it == angles_.end()) return angles_.size() - 1;
  const auto hi = static_cast<std::size_t>(it - angles_.begin());
  return (theta - angles_[hi - 1] <= angles_[hi] - theta) ? hi - 1 : hi;
}

DoaEstimate find_peaks(const Spectrum& spectrum, std::size_t q) {
  const auto& s = spectrum.scores;
  const std::size_t n = s.size();
  if (n != spectrum.grid.size()) throw std::invalid_argument("find_peaks: score/grid size mismatch");
  if (!spectrum.grid.is_uniform()) throw std::invalid_argument("find_peaks: requires a uniform grid");
  if (n < 3) throw std::invalid_argument("find_peaks: spectrum needs at least 3 samples");
  if (q == 0 || q >= n) throw std::invalid_argument("find_peaks: need 1 <= q < grid size");

  // Local maxima over runs of equal values; a run counts if every existing
  // exterior neighbour is strictly lower. The run's leftmost index is used.
  std::vector<std::size_t> maxima;
  for (std::size_t a = 0; a < n;) {
    std::size_t b = a;
    while (b + 1 < n && s[b + 1] == s[a]) ++b;
    const bool left_ok = a == 0 || s[a - 1] < s[a];
    const bool right_ok = b + 1 == n || s[b + 1] < s[a];
    if (left_ok && right_ok) maxima.push_back(a);
    a = b + 1;
  }

  auto by_score = [&](std::size_t i, std::size_t j) {
    return s[i] != s[j] ? s[i] > s[j] : i < j;
  };
  std::stable_sort(maxima.begin(), maxima.end(), by_score);
  if (maxima.size() > q) maxima.resize(q);

  std::vector<std::size_t> chosen = maxima;
  if (chosen.size() < q) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), by_score);
    std::vector<char> blocked(n, 0);
    auto block = [&](std::size_t i) {
      blocked[i] = 1;
      if (i > 0) blocked[i - 1] = 1;
      if (i + 1 < n) blocked[i + 1] = 1;
    };
    std::vector<char> taken(n, 0);
    for (auto i : chosen) {
      block(i);
      taken[i] = 1;
    }
    for (auto i : order) {
      if (chosen.size() == q) break;
      if (blocked[i]) continue;
      chosen.push_back(i);
      taken[i] = 1;
      block(i);
    }
    // Tiny grids can run out of non-adjacent samples; fall back to any.
    for (auto i : order) {
      if (chosen.size() == q) break;
      if (!taken[i]) {
        chosen.push_back(i);
        taken[i] = 1;
      }
    }
  }

  std::sort(chosen.begin(), chosen.end());
  DoaEstimate est;
  est.indices = chosen;
  for (auto i : chosen) {
    est.angles.push_back(spectrum.grid[i]);
    est.scores.push_back(s[i]);
  }
  return est;
}

std::vector<double> pair_and_error(std::span<const double> estimated,
                                   std::span<const double> true_angles) {
  if (estimated.size() != true_angles.size()) {
    throw std::invalid_argument("pair_and_error: length mismatch");
  }
  std::vector<double> e(estimated.begin(), estimated.end());
  std::vector<double> t(true_angles.begin(), true_angles.end());
  std::sort(e.begin(), e.end());
  std::sort(t.begin(), t.end());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] -= t[i];
  return e;
}

std::vector<double> pair_and_error(const DoaEstimate& estimated, std::span<const double> true_angles) {
  return pair_and_error(std::span<const double>(estimated.angles), true_angles);
}

double rmse(std::span<const std::vector<double>> per_trial_errors) {
  if (per_trial_errors.empty()) throw std::invalid_argument("rmse: no trials");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& errs : per_trial_errors) {
    for (double e : errs) sum += e * e;
    count += errs.size();
  }
  if (count == 0) throw std::invalid_argument("rmse: no errors recorded");
  return std::sqrt(sum / static_cast<double>(count));
}

double rmse(std::span<const double> errors) {
  if (errors.empty()) throw std::invalid_argument("rmse: no errors");
  double sum = 0.0;
  for (double e : errors) sum += e * e;
  return std::sqrt(sum / static_cast<double>(errors.size()));
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_spectrum(std::ostream& os, const Spectrum& spectrum, const std::string& metadata) {
  if (spectrum.scores.size() != spectrum.grid.size()) {
    throw std::invalid_argument("write_spectrum: score/grid size mismatch");
  }
  os << "# estimator=" << (spectrum.estimator.empty() ? "unknown" : spectrum.estimator);
  if (!metadata.empty()) os << ' ' << metadata;
  os << '\n';
  for (std::size_t i = 0; i < spectrum.scores.size(); ++i) {
    os << fmt_double(spectrum.grid[i]) << ' ' << fmt_double(spectrum.scores[i]) << '\n';
  }
}

Spectrum read_spectrum(std::istream& is) {
  Spectrum sp;
  std::vector<double> angles;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("estimator=");
      if (pos != std::string::npos) {
        const auto end = line.find(' ', pos);
        sp.estimator = line.substr(pos + 10, end == std::string::npos ? end : end - pos - 10);
      }
      continue;
    }
    std::istringstream ls(line);
    double a = 0.0, v = 0.0;
    if (!(ls >> a >> v)) throw std::invalid_argument("read_spectrum: malformed row: " + line);
    angles.push_back(a);
    sp.scores.push_back(v);
  }
  sp.grid = AngleGrid::irregular(std::move(angles));
  return sp;
}

}  // namespace sp2net
