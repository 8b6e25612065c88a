#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace polyflow {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXd;
using Eigen::VectorXi;

// Deterministic uniform sampler. The raw 64-bit stream of std::mt19937_64 is
// specified by the standard, and the 53-bit float conversion below is fixed,
// so identical seeds give identical samples on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  VectorXd uniform_vec(const VectorXd& lo, const VectorXd& hi) {
    VectorXd x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = uniform(lo[i], hi[i]);
    return x;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace polyflow
