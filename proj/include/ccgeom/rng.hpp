#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace ccgeom {

// Deterministic generator with cheap stream splitting. All stochastic
// operations in the library take explicit seeds and derive per-task streams
// with split(), so results do not depend on thread count.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) {
    next_u64();
    next_u64();
  }

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; one value per call keeps the stream layout simple.
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // uniform on the unit sphere S^{d-1}
  Eigen::VectorXd sphere(int d) {
    Eigen::VectorXd v(d);
    double n2 = 0;
    do {
      for (int i = 0; i < d; ++i) v[i] = normal();
      n2 = v.squaredNorm();
    } while (n2 < 1e-12);
    return v / std::sqrt(n2);
  }

  // uniform in the unit ball of R^d
  Eigen::VectorXd ball(int d) {
    Eigen::VectorXd v = sphere(d);
    return v * std::pow(uniform(), 1.0 / d);
  }

  Rng split(uint64_t task_index) const {
    return Rng(state_ ^ (0xd1342543de82ef95ull * (task_index + 1)));
  }

private:
  uint64_t state_;
};

}  // namespace ccgeom
