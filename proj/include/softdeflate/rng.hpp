#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace softdeflate {

/// Seeded random stream. Child streams come from split(), which consumes one
/// draw of the parent, so a fixed call order gives a fixed tree of streams.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  Rng split() { return Rng(engine_()); }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0) {
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = stddev * normal();
    return out;
  }

  Engine& engine() { return engine_; }

  /// splitmix64 finalizer; decorrelates nearby integer seeds.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  Engine engine_;
};

}  // namespace softdeflate
