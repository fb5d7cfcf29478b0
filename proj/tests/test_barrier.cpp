#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "slap/barrier.hpp"

using namespace slap;

namespace {

std::vector<Ellipsoid> unit_circle() {
  return {Ellipsoid::from_cp(Vec2(0, 0), Mat2::Identity())};
}

ObfParams hand_params() {
  ObfParams p;
  p.amplitude = 1.0;
  p.exponent = 1;
  p.axis_grid = 1;
  p.cap = 1e9;
  return p;
}

}  // namespace

TEST_CASE("obf value: hand arithmetic on the unit circle") {
  // M=1, q=1, m=1: singular points (+-1,0),(0,+-1); x=(2,0):
  // e^{-4} + 1/1 + 1/9 + 1/5 + 1/5
  const double v = obf_value(unit_circle(), hand_params(), Vec2(2, 0));
  const double expected = std::exp(-4.0) + 1.0 + 1.0 / 9.0 + 0.2 + 0.2;
  CHECK(v == doctest::Approx(expected).epsilon(1e-9));
  CHECK(v == doctest::Approx(1.5294).epsilon(1e-4));
}

TEST_CASE("obf value: capped at singular coincidences, decays far away") {
  ObfParams p;
  p.amplitude = 1.0;
  p.exponent = 1;
  p.axis_grid = 2;  // even m: theta = 0.5 hits the center
  const auto obs = unit_circle();
  CHECK(obf_value(obs, p, Vec2(0, 0)) >= p.cap / p.amplitude);
  CHECK(std::isfinite(obf_value(obs, p, Vec2(0, 0))));

  // monotone decay along a ray beyond the outermost singular point
  double prev = obf_value(obs, hand_params(), Vec2(1.5, 0));
  for (double x = 1.6; x < 8.0; x += 0.1) {
    const double cur = obf_value(obs, hand_params(), Vec2(x, 0));
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("obf: nonnegative and additive over obstacles") {
  ObfParams p;
  std::vector<Ellipsoid> two = {
      Ellipsoid::from_cp(Vec2(0, 0), Mat2::Identity()),
      Ellipsoid::from_cp(Vec2(3, 0), 4.0 * Mat2::Identity())};
  RngStream rng(1, 31);
  for (int i = 0; i < 20; ++i) {
    const Vec2 x(4.0 * rng.gaussian(), 4.0 * rng.gaussian());
    const double v01 = obf_value(two, p, x);
    const double v0 = obf_value({two[0]}, p, x);
    const double v1 = obf_value({two[1]}, p, x);
    CHECK(v01 >= 0.0);
    CHECK(v01 == doctest::Approx(v0 + v1).epsilon(1e-12));
  }
}

TEST_CASE("obf gradient matches finite differences") {
  ObfParams p;  // defaults M=10, q=2, m=10
  const auto obs = unit_circle();
  BarrierField field(obs, p);
  RngStream rng(2, 31);
  int checked = 0;
  for (int i = 0; i < 200 && checked < 50; ++i) {
    const Vec2 x(3.0 * rng.gaussian(), 3.0 * rng.gaussian());
    if (field.capped_at(x)) continue;
    // keep away from singular points so the quadratic term is resolvable
    bool near = false;
    for (double th = 0.0; th <= 1.0001; th += 0.1) {
      for (const Vec2& s :
           {Vec2(2 * th - 1, 0.0), Vec2(0.0, 2 * th - 1)})
        if ((x - s).norm() < 1e-2) near = true;
    }
    if (near) continue;
    ++checked;
    const Vec2 g = field.gradient(x);
    Vec xv(2);
    xv << x.x(), x.y();
    const Vec g_fd = oracles::fd_gradient(
        [&](const Vec& q) { return field.value(Vec2(q[0], q[1])); }, xv);
    const double scale = std::max(1.0, g.norm());
    CHECK((g - Vec2(g_fd[0], g_fd[1])).norm() / scale < 1e-4);
  }
  CHECK(checked == 50);
}

TEST_CASE("obf gradient: symmetry and descent direction") {
  ObfParams p = hand_params();
  const auto obs = unit_circle();
  const Vec2 g = obf_gradient(obs, p, Vec2(2.5, 0));
  CHECK(std::abs(g.y()) < 1e-12);  // axis-aligned by symmetry
  // the barrier decreases outward: directional derivative along +x < 0
  CHECK(g.x() < 0.0);
}

TEST_CASE("obstacle cost: trivial segments and symmetry") {
  ObfParams p;
  const auto obs = unit_circle();
  CHECK(obstacle_cost(obs, p, Vec2(2, 2), Vec2(2, 2)) == 0.0);
  // the capped singular terms leave a slowly decaying 1/d^2 tail: bound it
  // by amplitude * points * len / dist^2 at ~700 m
  const double far = obstacle_cost(obs, p, Vec2(500, 500), Vec2(501, 500));
  CHECK(far > 0.0);
  CHECK(far < p.amplitude * 2.0 * (p.axis_grid + 1) / (700.0 * 700.0) * 2.0);
  const double ab = obstacle_cost(obs, p, Vec2(-2, 1.4), Vec2(2, 1.4));
  const double ba = obstacle_cost(obs, p, Vec2(2, 1.4), Vec2(-2, 1.4));
  CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
}

TEST_CASE("obstacle cost converges to the quadrature oracle") {
  ObfParams p;
  p.n_seg = 400;
  const auto obs = unit_circle();
  BarrierField field(obs, p);
  const Vec2 a(-2.0, 1.3), b(2.0, 1.5);  // grazes the obstacle
  const double len = (b - a).norm();
  const double exact = oracles::adaptive_simpson(
      [&](double t) { return field.value(a + t * (b - a)); }, 0.0, 1.0, 1e-10);
  CHECK(field.segment_cost(a, b) ==
        doctest::Approx(len * exact).epsilon(0.01));
}

TEST_CASE("segment cost gradient matches finite differences") {
  ObfParams p;
  BarrierField field(unit_circle(), p);
  RngStream rng(3, 31);
  for (int i = 0; i < 20; ++i) {
    const Vec2 a(2.0 + rng.uniform(), 1.0 + rng.uniform());
    const Vec2 b(-2.0 - rng.uniform(), 1.0 + rng.uniform());
    Vec2 g1, g2;
    field.segment_cost_grad(a, b, g1, g2);
    Vec q(4);
    q << a.x(), a.y(), b.x(), b.y();
    const Vec g_fd = oracles::fd_gradient(
        [&](const Vec& v) {
          return field.segment_cost(Vec2(v[0], v[1]), Vec2(v[2], v[3]));
        },
        q);
    Vec g(4);
    g << g1.x(), g1.y(), g2.x(), g2.y();
    CHECK((g - g_fd).norm() / std::max(1.0, g.norm()) < 1e-3);
  }
}

TEST_CASE("dynamic obstacle cost") {
  ObfParams p;
  ObstacleTrack tr{Ellipsoid::from_cp(Vec2(0, 0), Mat2::Identity()),
                   Vec2(100.0, 0.0), 0.0};
  std::vector<std::vector<Ellipsoid>> schedule;
  for (int t = 0; t < 3; ++t)
    schedule.push_back({predict_obstacle(tr, static_cast<double>(t))});

  const Vec2 a(-1.5, 0.2), b(1.5, 0.2);
  // overlapping at t=0, far away at t=2
  CHECK(obstacle_cost_dynamic(schedule, p, a, b, 0) > 1.0);
  CHECK(obstacle_cost_dynamic(schedule, p, a, b, 2) <
        1e-3 * obstacle_cost_dynamic(schedule, p, a, b, 0));
  CHECK(obstacle_cost_dynamic(schedule, p, a, b, 0) ==
        doctest::Approx(obstacle_cost(schedule[0], p, a, b)));
  CHECK_THROWS_AS(obstacle_cost_dynamic(schedule, p, a, b, 3),
                  DimensionError);

  // static schedule: equal at every index
  std::vector<std::vector<Ellipsoid>> still(3, schedule[0]);
  CHECK(obstacle_cost_dynamic(still, p, a, b, 1) ==
        doctest::Approx(obstacle_cost_dynamic(still, p, a, b, 2)));
}

TEST_CASE("params validation") {
  ObfParams p;
  p.cap = 10.0;  // cap must dominate the amplitude
  CHECK_THROWS_AS(p.validate(), DimensionError);
  ObfParams q;
  q.exponent = 0;
  CHECK_THROWS_AS(q.validate(), DimensionError);
}
