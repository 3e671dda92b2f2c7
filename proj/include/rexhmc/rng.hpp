#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace rexhmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Seedable random stream. Each chain owns its own stream, derived from the
/// master seed and a stream index, so runs are reproducible and independent of
/// how chains are scheduled across threads.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : engine_(mix(master_seed, stream_id)) {}

  double uniform() { return uniform_(engine_); }

  double normal() { return normal_(engine_); }

  Vector normal_vector(Eigen::Index n) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  // splitmix64 over (seed, id) decorrelates nearby seeds and stream indices.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t id) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (id + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rexhmc
