#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace plab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic random stream. Uniform and normal variates are generated by
/// hand (bit-shift uniform, Box-Muller) instead of std distributions so the
/// stream does not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Identifier of the independent stream for one trial; mixing keeps the
  /// streams schedule-free and replayable from (seed, trial) alone.
  static std::uint64_t stream_id(std::uint64_t seed, std::uint64_t trial) {
    std::uint64_t s = seed ^ (0xb5ad4eceda1ce2a9ULL + trial);
    const std::uint64_t a = splitmix64(s);
    return a ^ splitmix64(s);
  }

  static Rng for_trial(std::uint64_t seed, std::uint64_t trial) {
    return Rng(stream_id(seed, trial));
  }

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::MatrixXd gaussian_matrix(int rows, int cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = scale * normal();
    }
    return m;
  }

  Eigen::VectorXd uniform_vector(const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
    Eigen::VectorXd x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) x(i) = uniform(lo(i), hi(i));
    return x;
  }

  std::uint64_t raw() { return engine_(); }

  /// Integer in [0, n).
  std::uint64_t index(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace plab
