#ifndef SLAP_COMMON_HPP
#define SLAP_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace slap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using ControlSequence = std::vector<Vec>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct DegenerateObservationError : Error {
  using Error::Error;
};
struct DegenerateGeometryError : Error {
  using Error::Error;
};
struct FilterDivergenceError : Error {
  using Error::Error;
};
struct InfeasibleSeedError : Error {
  using Error::Error;
};
struct ScenarioError : Error {
  using Error::Error;
};

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

// Deterministic per-purpose RNG stream derived from a master seed.
// splitmix64 mixing keeps streams for different (tag, step) pairs decorrelated.
class RngStream {
 public:
  RngStream(std::uint64_t master, std::uint64_t tag, std::uint64_t step = 0)
      : gen_(mix(mix(master ^ 0x9e3779b97f4a7c15ull, tag), step)) {}
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  double gaussian() { return normal_(gen_); }
  double uniform() { return uniform_(gen_); }

  Vec gaussian_vec(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace slap

#endif  // SLAP_COMMON_HPP
