#ifndef SLAP_GEOMETRY_HPP
#define SLAP_GEOMETRY_HPP

#include "slap/common.hpp"

#include <algorithm>

namespace slap {

struct Polygon {
  std::vector<Vec2> vertices;
};

// {x : (x - c)^T P (x - c) <= 1} with cached axis endpoints. zeta is the
// pair on the longer (major) axis, xi on the shorter one.
struct Ellipsoid {
  Vec2 c = Vec2::Zero();
  Mat2 P = Mat2::Identity();
  Vec2 zeta1, zeta2, xi1, xi2;

  static Ellipsoid from_cp(const Vec2& c, const Mat2& P) {
    Ellipsoid e;
    e.c = c;
    e.P = 0.5 * (P + P.transpose());
    Eigen::SelfAdjointEigenSolver<Mat2> es(e.P);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw DegenerateGeometryError("ellipsoid: P must be positive definite");
    // Eigenvalues ascending: index 0 is the smaller eigenvalue, i.e. the
    // longer semi-axis. Circle ties resolve to the first eigenvector.
    const Vec2 v_major = es.eigenvectors().col(0);
    const Vec2 v_minor = es.eigenvectors().col(1);
    const double a = 1.0 / std::sqrt(es.eigenvalues()[0]);
    const double b = 1.0 / std::sqrt(es.eigenvalues()[1]);
    e.zeta1 = c + a * v_major;
    e.zeta2 = c - a * v_major;
    e.xi1 = c + b * v_minor;
    e.xi2 = c - b * v_minor;
    return e;
  }

  double level(const Vec2& x) const {
    const Vec2 d = x - c;
    return d.dot(P * d);
  }
};

inline bool contains(const Ellipsoid& e, const Vec2& x) {
  return e.level(x) <= 1.0;
}

// Closed segment vs closed ellipsoid: quadratic in the segment parameter,
// clamped to [0, 1].
inline bool segment_intersects(const Ellipsoid& e, const Vec2& a,
                               const Vec2& b) {
  const Vec2 d = b - a;
  const Vec2 f = a - e.c;
  const double qa = d.dot(e.P * d);
  const double qb = 2.0 * f.dot(e.P * d);
  const double qc = f.dot(e.P * f) - 1.0;
  if (qa < 1e-18) return qc <= 0.0;
  double t = std::clamp(-qb / (2.0 * qa), 0.0, 1.0);
  return qa * t * t + qb * t + qc <= 0.0;
}

// Khachiyan's first-order iteration for the minimum-volume enclosing
// ellipsoid of a planar point set.
inline Ellipsoid mvee(const std::vector<Vec2>& points, double tol = 1e-7,
                      int max_iter = 10000) {
  const int n = static_cast<int>(points.size());
  const int d = 2;
  if (n < 3)
    throw DegenerateGeometryError("mvee: need at least 3 points");
  if (tol <= 0.0) throw DegenerateGeometryError("mvee: tol must be > 0");

  Mat Q(d + 1, n);
  for (int i = 0; i < n; ++i) {
    Q(0, i) = points[static_cast<std::size_t>(i)].x();
    Q(1, i) = points[static_cast<std::size_t>(i)].y();
    Q(2, i) = 1.0;
  }
  Vec u = Vec::Constant(n, 1.0 / n);
  for (int iter = 0; iter < max_iter; ++iter) {
    Mat X = Q * u.asDiagonal() * Q.transpose();
    Eigen::FullPivLU<Mat> lu(X);
    if (!lu.isInvertible())
      throw DegenerateGeometryError("mvee: degenerate (collinear) point set");
    Mat Xinv = lu.inverse();
    int j = 0;
    double kappa = -1.0;
    for (int i = 0; i < n; ++i) {
      const double m = Q.col(i).dot(Xinv * Q.col(i));
      if (m > kappa) {
        kappa = m;
        j = i;
      }
    }
    if (kappa <= (1.0 + tol) * (d + 1)) break;
    const double step = (kappa - d - 1.0) / ((d + 1.0) * (kappa - 1.0));
    u *= (1.0 - step);
    u[j] += step;
  }

  Mat Pm(d, n);
  for (int i = 0; i < n; ++i) Pm.col(i) = points[static_cast<std::size_t>(i)];
  const Vec2 c = Pm * u;
  Mat2 S = Pm * u.asDiagonal() * Pm.transpose() - c * c.transpose();
  Eigen::FullPivLU<Mat2> lu(S);
  if (!lu.isInvertible() || S.determinant() <= 0.0)
    throw DegenerateGeometryError("mvee: degenerate (collinear) point set");
  Mat2 shape = lu.inverse() / static_cast<double>(d);
  // Khachiyan's iteration converges sublinearly; rescale so the farthest
  // input point lies exactly on the boundary, restoring containment.
  double max_level = 0.0;
  for (const Vec2& q : points) {
    const Vec2 dq = q - c;
    max_level = std::max(max_level, dq.dot(shape * dq));
  }
  if (max_level > 0.0) shape /= max_level;
  return Ellipsoid::from_cp(c, shape);
}

namespace detail {

inline bool segments_cross(const Vec2& a1, const Vec2& a2, const Vec2& b1,
                           const Vec2& b2) {
  auto cross = [](const Vec2& p, const Vec2& q) {
    return p.x() * q.y() - p.y() * q.x();
  };
  const double d1 = cross(a2 - a1, b1 - a1);
  const double d2 = cross(a2 - a1, b2 - a1);
  const double d3 = cross(b2 - b1, a1 - b1);
  const double d4 = cross(b2 - b1, a2 - b1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

inline double signed_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % v.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

inline bool self_intersects(const std::vector<Vec2>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      // skip adjacent edges (shared vertex)
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
        return true;
    }
  return false;
}

}  // namespace detail

// Displaces every vertex outward along its angle bisector so the original
// edges end up at distance >= radius from the inflated boundary.
inline Polygon inflate(const Polygon& poly, double radius) {
  if (radius < 0.0)
    throw DegenerateGeometryError("inflate: radius must be >= 0");
  if (poly.vertices.size() < 3)
    throw DegenerateGeometryError("inflate: polygon needs >= 3 vertices");
  if (detail::self_intersects(poly.vertices))
    throw DegenerateGeometryError("inflate: polygon self-intersects");
  if (radius == 0.0) return poly;

  std::vector<Vec2> v = poly.vertices;
  if (detail::signed_area(v) < 0.0) std::reverse(v.begin(), v.end());

  const std::size_t n = v.size();
  Polygon out;
  out.vertices.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& prev = v[(i + n - 1) % n];
    const Vec2& cur = v[i];
    const Vec2& next = v[(i + 1) % n];
    const Vec2 d1 = (cur - prev).normalized();
    const Vec2 d2 = (next - cur).normalized();
    // outward normals of a CCW polygon
    const Vec2 n1(d1.y(), -d1.x());
    const Vec2 n2(d2.y(), -d2.x());
    Vec2 bis = n1 + n2;
    if (bis.norm() < 1e-12)
      throw DegenerateGeometryError("inflate: needle vertex");
    bis.normalize();
    const double proj = bis.dot(n1);
    if (proj < 1e-9)
      throw DegenerateGeometryError("inflate: reflex vertex too sharp");
    out.vertices[i] = cur + bis * (radius / proj);
  }
  if (detail::self_intersects(out.vertices))
    throw DegenerateGeometryError("inflate: result self-intersects");
  return out;
}

// Rigid motion model for a tracked obstacle: constant velocity plus constant
// rotation rate about the center.
struct ObstacleTrack {
  Ellipsoid base;
  Vec2 velocity = Vec2::Zero();
  double rotation_rate = 0.0;  // rad/s
};

inline Ellipsoid predict_obstacle(const ObstacleTrack& track, double dt) {
  if (dt < 0.0) throw DegenerateGeometryError("predict_obstacle: dt < 0");
  const double ang = track.rotation_rate * dt;
  Mat2 R;
  R << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
  return Ellipsoid::from_cp(track.base.c + track.velocity * dt,
                            R * track.base.P * R.transpose());
}

struct AxisEndpoints {
  Vec2 zeta1, zeta2, xi1, xi2;
};

inline AxisEndpoints axis_endpoints(const Ellipsoid& e) {
  return {e.zeta1, e.zeta2, e.xi1, e.xi2};
}

}  // namespace slap

#endif  // SLAP_GEOMETRY_HPP
