#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace oapf {

/// A seeded random stream. Every sampling routine takes one explicitly; there
/// is no global generator. Streams for independent Monte Carlo runs are derived
/// from (master seed, run index, sub-stream tag) so that runs can execute in
/// any order or in parallel and still reproduce bit for bit.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t master_seed, std::uint64_t run_index, std::uint64_t tag);

  /// Uniform on [0, 1).
  double uniform();
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace oapf
