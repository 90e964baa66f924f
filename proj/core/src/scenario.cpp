#include "sp2net/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sp2net {

std::vector<double> Scenario::sorted_angles() const {
  std::vector<double> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(s.theta_deg);
  std::sort(out.begin(), out.end());
  return out;
}

double sigma_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 20.0); }

ComplexVector draw_noise(Rng& rng, std::size_t m, double sigma_v) {
  if (!(sigma_v >= 0.0) || !std::isfinite(sigma_v)) {
    throw std::invalid_argument("draw_noise: sigma_v must be finite and >= 0");
  }
  ComplexVector v(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.complex_normal(sigma_v);
  return v;
}

ComplexVector synthesize_snapshot(const ArrayGeometry& geom, std::span<const Source> sources,
                                  double sigma_v, Rng& rng) {
  if (sources.empty()) {
    throw std::invalid_argument("synthesize_snapshot: at least one source required");
  }
  ComplexVector x = ComplexVector::Zero(static_cast<Eigen::Index>(geom.num_elements()));
  for (const auto& src : sources) {
    if (!(src.theta_deg > 0.0 && src.theta_deg < 180.0)) {
      throw std::invalid_argument("synthesize_snapshot: source angle outside (0, 180)");
    }
    x += steering_vector(geom, src.theta_deg) * src.amplitude;
  }
  x += draw_noise(rng, geom.num_elements(), sigma_v);
  return x;
}

Scenario sample_training_scenario(const ArrayGeometry& geom, Rng& rng) {
  const FieldOfView fov;
  Scenario sc;
  const auto q = static_cast<std::size_t>(rng.uniform_int(1, 3));
  sc.sources.resize(q);
  for (auto& s : sc.sources) s.theta_deg = rng.uniform(fov.lo, fov.hi);
  for (std::size_t i = 0; i < q; ++i) {
    const double mag = i == 0 ? 1.0 : rng.uniform(0.5, 1.0);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    sc.sources[i].amplitude = std::polar(mag, phase);
  }
  sc.snr_db = static_cast<double>(rng.uniform_int(0, 40));
  sc.sigma_v = sigma_from_snr_db(sc.snr_db);
  sc.snapshot = synthesize_snapshot(geom, sc.sources, sc.sigma_v, rng);
  return sc;
}

namespace {

void put(std::ostringstream& os, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  os << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
}

}  // namespace

std::string format_scenario_line(const Scenario& sc) {
  std::ostringstream os;
  os << sc.sources.size();
  for (const auto& s : sc.sources) put(os, s.theta_deg);
  for (const auto& s : sc.sources) {
    put(os, s.amplitude.real());
    put(os, s.amplitude.imag());
  }
  put(os, sc.sigma_v);
  for (Eigen::Index i = 0; i < sc.snapshot.size(); ++i) {
    put(os, sc.snapshot[i].real());
    put(os, sc.snapshot[i].imag());
  }
  return os.str();
}

Scenario parse_scenario_line(std::string_view line) {
  std::vector<double> tok;
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) break;
    double v = 0.0;
    auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc()) {
      throw std::invalid_argument("scenario line: malformed number near '" +
                                  std::string(p, std::min<std::size_t>(16, static_cast<std::size_t>(end - p))) + "'");
    }
    tok.push_back(v);
    p = res.ptr;
  }
  if (tok.empty()) throw std::invalid_argument("scenario line: empty");
  const double qd = tok[0];
  if (qd < 1 || qd != std::floor(qd)) throw std::invalid_argument("scenario line: bad source count");
  const auto q = static_cast<std::size_t>(qd);
  const std::size_t header = 1 + 3 * q + 1;
  if (tok.size() < header + 2 || (tok.size() - header) % 2 != 0) {
    throw std::invalid_argument("scenario line: wrong token count");
  }
  Scenario sc;
  sc.sources.resize(q);
  for (std::size_t i = 0; i < q; ++i) {
    sc.sources[i].theta_deg = tok[1 + i];
    sc.sources[i].amplitude = Complex(tok[1 + q + 2 * i], tok[2 + q + 2 * i]);
  }
  sc.sigma_v = tok[1 + 3 * q];
  if (sc.sigma_v < 0) throw std::invalid_argument("scenario line: negative sigma_v");
  sc.snr_db = -20.0 * std::log10(sc.sigma_v);
  const std::size_t m = (tok.size() - header) / 2;
  sc.snapshot.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    sc.snapshot[static_cast<Eigen::Index>(i)] = Complex(tok[header + 2 * i], tok[header + 2 * i + 1]);
  }
  return sc;
}

void write_scenarios(std::ostream& os, std::span<const Scenario> scenarios) {
  for (const auto& sc : scenarios) os << format_scenario_line(sc) << '\n';
}

std::vector<Scenario> read_scenarios(std::istream& is) {
  std::vector<Scenario> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    out.push_back(parse_scenario_line(line));
  }
  return out;
}

}  // namespace sp2net
