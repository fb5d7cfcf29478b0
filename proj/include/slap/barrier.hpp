#ifndef SLAP_BARRIER_HPP
#define SLAP_BARRIER_HPP

#include "slap/geometry.hpp"

namespace slap {

struct ObfParams {
  double amplitude = 10.0;  // M
  int exponent = 2;         // q
  int axis_grid = 10;       // m, singular points at theta = 0, 1/m, ..., 1
  double cap = 1e9;         // finite stand-in for the singular values
  int n_seg = 5;            // midpoint samples per trajectory segment
  bool interior_grid = false;

  void validate() const {
    if (amplitude <= 0.0 || exponent < 1 || axis_grid < 1 || n_seg < 1 ||
        cap < 1e6 * amplitude)
      throw DimensionError("obf params: out of range");
  }
};

// Precomputed barrier field for one obstacle set: exponential territory terms
// plus capped inverse-square singular points along the ellipsoid axes.
class BarrierField {
 public:
  BarrierField() = default;

  BarrierField(std::vector<Ellipsoid> obstacles, const ObfParams& p)
      : obstacles_(std::move(obstacles)), p_(p) {
    p_.validate();
    for (const Ellipsoid& e : obstacles_) {
      std::vector<Vec2> axis_pts;
      for (int k = 0; k <= p_.axis_grid; ++k) {
        const double th = static_cast<double>(k) / p_.axis_grid;
        axis_pts.push_back(th * e.zeta1 + (1.0 - th) * e.zeta2);
        axis_pts.push_back(th * e.xi1 + (1.0 - th) * e.xi2);
      }
      if (p_.interior_grid) {
        const std::size_t base = axis_pts.size();
        for (std::size_t i = 0; i < base; ++i)
          for (std::size_t j = i + 1; j < base; ++j)
            for (int k = 1; k < p_.axis_grid; ++k) {
              const double th = static_cast<double>(k) / p_.axis_grid;
              axis_pts.push_back(th * axis_pts[i] + (1.0 - th) * axis_pts[j]);
            }
      }
      singular_.insert(singular_.end(), axis_pts.begin(), axis_pts.end());
    }
  }

  const std::vector<Ellipsoid>& obstacles() const { return obstacles_; }
  const ObfParams& params() const { return p_; }

  double value(const Vec2& x) const {
    double v = 0.0;
    for (const Ellipsoid& e : obstacles_)
      v += std::exp(-std::pow(e.level(x), p_.exponent));
    const double term_cap = p_.cap / p_.amplitude;
    for (const Vec2& s : singular_) {
      const double d2 = (x - s).squaredNorm();
      v += (d2 <= 1.0 / term_cap) ? term_cap : 1.0 / d2;
    }
    return p_.amplitude * v;
  }

  // Analytic gradient; capped inverse-square terms contribute zero.
  Vec2 gradient(const Vec2& x) const {
    Vec2 g = Vec2::Zero();
    for (const Ellipsoid& e : obstacles_) {
      const double s = e.level(x);
      const double q = p_.exponent;
      // d/dx exp(-s^q) = -q s^(q-1) exp(-s^q) * 2 P (x - c)
      const double coeff = -q * std::pow(s, q - 1.0) * std::exp(-std::pow(s, q));
      g += coeff * 2.0 * (e.P * (x - e.c));
    }
    const double term_cap = p_.cap / p_.amplitude;
    for (const Vec2& sp : singular_) {
      const Vec2 d = x - sp;
      const double d2 = d.squaredNorm();
      if (d2 <= 1.0 / term_cap) continue;
      g += -2.0 * d / (d2 * d2);
    }
    return p_.amplitude * g;
  }

  bool capped_at(const Vec2& x) const {
    const double term_cap = p_.cap / p_.amplitude;
    for (const Vec2& s : singular_)
      if ((x - s).squaredNorm() <= 1.0 / term_cap) return true;
    return false;
  }

  // Line-integral obstacle cost: segment length times the mean barrier value
  // at n_seg midpoint-rule samples strictly inside (x1, x2).
  double segment_cost(const Vec2& x1, const Vec2& x2) const {
    const double len = (x2 - x1).norm();
    if (len == 0.0) return 0.0;
    double mean = 0.0;
    for (int k = 0; k < p_.n_seg; ++k) {
      const double s = (k + 0.5) / p_.n_seg;
      mean += value(x1 + s * (x2 - x1));
    }
    return len * mean / p_.n_seg;
  }

  // Cost plus its gradient with respect to both endpoints. Reports whether
  // any sample landed in a capped region.
  double segment_cost_grad(const Vec2& x1, const Vec2& x2, Vec2& g1, Vec2& g2,
                           bool* capped = nullptr) const {
    g1.setZero();
    g2.setZero();
    const Vec2 d = x2 - x1;
    const double len = d.norm();
    if (capped) *capped = false;
    if (len == 0.0) return 0.0;
    const Vec2 dir = d / len;
    double mean = 0.0;
    Vec2 mean_g1 = Vec2::Zero(), mean_g2 = Vec2::Zero();
    for (int k = 0; k < p_.n_seg; ++k) {
      const double s = (k + 0.5) / p_.n_seg;
      const Vec2 pt = x1 + s * d;
      mean += value(pt);
      const Vec2 g = gradient(pt);
      mean_g1 += (1.0 - s) * g;
      mean_g2 += s * g;
      if (capped && capped_at(pt)) *capped = true;
    }
    mean /= p_.n_seg;
    mean_g1 /= p_.n_seg;
    mean_g2 /= p_.n_seg;
    g1 = -dir * mean + len * mean_g1;
    g2 = dir * mean + len * mean_g2;
    return len * mean;
  }

 private:
  std::vector<Ellipsoid> obstacles_;
  ObfParams p_;
  std::vector<Vec2> singular_;
};

inline double obf_value(const std::vector<Ellipsoid>& obstacles,
                        const ObfParams& p, const Vec2& x) {
  return BarrierField(obstacles, p).value(x);
}

inline Vec2 obf_gradient(const std::vector<Ellipsoid>& obstacles,
                         const ObfParams& p, const Vec2& x) {
  return BarrierField(obstacles, p).gradient(x);
}

inline double obstacle_cost(const std::vector<Ellipsoid>& obstacles,
                            const ObfParams& p, const Vec2& x1,
                            const Vec2& x2) {
  return BarrierField(obstacles, p).segment_cost(x1, x2);
}

// Time-varying variant: identical evaluation against the obstacle set
// predicted for time index t.
inline double obstacle_cost_dynamic(
    const std::vector<std::vector<Ellipsoid>>& schedule, const ObfParams& p,
    const Vec2& x1, const Vec2& x2, int t) {
  if (t < 0 || t >= static_cast<int>(schedule.size()))
    throw DimensionError("obstacle_cost_dynamic: time outside schedule");
  return obstacle_cost(schedule[static_cast<std::size_t>(t)], p, x1, x2);
}

}  // namespace slap

#endif  // SLAP_BARRIER_HPP
