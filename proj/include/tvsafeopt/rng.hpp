#pragma once

#include <cstdint>
#include <random>

namespace tvsafeopt {

/// Named deterministic random stream: mt19937_64 seeded through
/// std::seed_seq{seed, stream}, uniforms via the top 53 bits, normals via
/// Box-Muller. Every step of the pipeline is fully specified, so a given
/// (seed, stream) pair reproduces the same sequence on any platform.
///
/// Streams used by the runner:
///   stream 0 — observation noise (shared across variants so comparisons
///              see identical noise sequences)
///   stream 1 — time-series generation
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{seed, stream};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline constexpr std::uint64_t kNoiseStream = 0;
inline constexpr std::uint64_t kSeriesStream = 1;

}  // namespace tvsafeopt
