#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace gfflab {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used only to derive
/// well-separated engine seeds from (seed, stream) pairs.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded random stream.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the C++
/// standard, seeded with splitmix64(seed ^ splitmix64(stream)). Every
/// sampler takes a user seed; independent replicas, walk blocks and
/// sub-tasks draw from distinct stream ids of the same seed, so results
/// never depend on thread count or scheduling.
///
/// Uniforms use the top 53 bits of one engine word. Normals use the
/// Marsaglia polar method and cache the second variate of each pair.
/// Neither goes through std:: distributions, whose algorithms are
/// implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(splitmix64(seed ^ splitmix64(stream))) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  void fill_normal(std::span<double> out) {
    for (double &x : out)
      x = normal();
  }

  /// Exponential with the given rate, by inversion.
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace gfflab
