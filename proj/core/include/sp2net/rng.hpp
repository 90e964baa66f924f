#pragma once

#include <complex>
#include <cstdint>

namespace sp2net {

// Counter-based generator: draw i of stream (seed, stream) is a pure
// function of (seed, stream, i). Variates are built by hand rather than via
// <random> distributions so that streams are identical across standard
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] (inclusive), unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  double normal();
  /// Circularly-symmetric complex normal with E|z|^2 = sigma^2.
  std::complex<double> complex_normal(double sigma);

  /// Independent generator for sub-stream `index` of this generator's
  /// (seed, stream) pair. Does not advance this generator.
  Rng substream(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace sp2net
