#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace clothfit {

using Real = double;
using Vec2 = Eigen::Matrix<Real, 2, 1>;
using Vec3 = Eigen::Matrix<Real, 3, 1>;
// One column per vertex / point; columns keep per-entity access contiguous.
using Mat3X = Eigen::Matrix<Real, 3, Eigen::Dynamic>;
using FaceMat = Eigen::Matrix<int, 3, Eigen::Dynamic>;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr Real kPi = 3.14159265358979323846;

// Bad inputs: malformed configs, inconsistent dimensions, out-of-range values.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failures: unreadable/unwritable paths, malformed files on disk.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite state during integration. Carries where and at which parameters.
struct SimDiverged : std::runtime_error {
  SimDiverged(int substep_, Real w_stiff_, Real w_mass_)
      : std::runtime_error("simulation diverged at substep " + std::to_string(substep_) +
                           " (w_stiff=" + std::to_string(w_stiff_) +
                           ", w_mass=" + std::to_string(w_mass_) + ")"),
        substep(substep_),
        w_stiff(w_stiff_),
        w_mass(w_mass_) {}
  int substep;
  Real w_stiff;
  Real w_mass;
};

// splitmix64; stable across platforms, used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// xoshiro-free minimal generator: splitmix64 stream. Distribution code below is
// hand-rolled so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  Real uniform01() { return Real(next_u64() >> 11) * (1.0 / 9007199254740992.0); }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, one value per call (pairs are not cached so call order is the
  // sole determinant of the sequence).
  Real gaussian() {
    const Real u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const Real u2 = uniform01();
    const Real r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace clothfit
