#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "slap/belief.hpp"

using namespace slap;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_CASE("predict: weights untouched, noiseless identity is a no-op") {
  ProcessModel m = ProcessModel::single_integrator(0.1, Vec::Zero(2), 1.0);
  ParticleBelief b = ParticleBelief::uniform({v2(0, 0), v2(1, 1)});
  RngStream rng(1, 9);
  ParticleBelief out = predict(b, m, Vec::Zero(2), rng);
  CHECK(out.weights == b.weights);
  for (int i = 0; i < b.size(); ++i)
    CHECK((out.particles[i] - b.particles[i]).norm() == 0.0);
}

TEST_CASE("predict: empirical mean shift follows the control") {
  const double sigma = 0.1;
  ProcessModel m =
      ProcessModel::single_integrator(0.1, Vec::Constant(2, sigma), 2.0);
  std::vector<Vec> ps(10000, v2(0, 0));
  ParticleBelief b = ParticleBelief::uniform(std::move(ps));
  RngStream rng(2, 9);
  Vec u(2);
  u << 1.0, 0.0;
  const Vec mean = predict(b, m, u, rng).mean();
  const double tol = 3.0 * sigma * std::sqrt(0.1) / std::sqrt(10000.0);
  CHECK(std::abs(mean[0] - 0.1) < tol);
  CHECK(std::abs(mean[1]) < tol);
}

TEST_CASE("update: hand-computed reweighting") {
  ObservationModel m(ObservationModel::Kind::RangeOnly, {Vec2(1.0, 0.0)},
                     Vec::Constant(1, 1.0));
  ParticleBelief b = ParticleBelief::uniform({v2(0, 0), v2(1, 0)});
  Vec z(1);
  z << 0.0;
  ParticleBelief out = update(b, m, z);
  // likelihoods exp(-0.5) and exp(0): weights e^{-1/2}/(1+e^{-1/2}), 1/(1+e^{-1/2})
  CHECK(out.weights[0] == doctest::Approx(0.3775).epsilon(1e-3));
  CHECK(out.weights[1] == doctest::Approx(0.6225).epsilon(1e-3));
  CHECK(std::abs(out.weights[0] + out.weights[1] - 1.0) < 1e-9);
}

TEST_CASE("update: identical particles stay uniform") {
  ObservationModel m(ObservationModel::Kind::RangeOnly, {Vec2(1.0, 0.0)},
                     Vec::Constant(1, 0.5));
  ParticleBelief b = ParticleBelief::uniform({v2(0, 0), v2(0, 0), v2(0, 0)});
  Vec z(1);
  z << 1.2;
  ParticleBelief out = update(b, m, z);
  for (double w : out.weights) CHECK(w == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("update: irreconcilable observation diverges") {
  ObservationModel m(ObservationModel::Kind::RangeOnly, {Vec2(0.0, 0.0)},
                     Vec::Constant(1, 0.01));
  ParticleBelief b = ParticleBelief::uniform({v2(1, 0), v2(1.01, 0)});
  Vec z(1);
  z << 1000.0;  // 50+ sigma away from every prediction
  CHECK_THROWS_AS(update(b, m, z), FilterDivergenceError);
}

TEST_CASE("resample: degenerate weights and uniform output") {
  ParticleBelief b;
  b.particles = {v2(1, 1), v2(2, 2), v2(3, 3)};
  b.weights = {1.0, 0.0, 0.0};
  RngStream rng(3, 9);
  ParticleBelief out = resample(b, rng);
  for (const Vec& p : out.particles) CHECK((p - v2(1, 1)).norm() == 0.0);
  for (double w : out.weights) CHECK(w == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("resample: expected multiplicity tracks the weights") {
  ParticleBelief b;
  b.particles = {v2(0, 0), v2(1, 0)};
  b.weights = {0.25, 0.75};
  double count1 = 0.0;
  const int trials = 2000;
  for (int s = 0; s < trials; ++s) {
    RngStream rng(static_cast<std::uint64_t>(s), 9);
    ParticleBelief out = resample(b, rng);
    for (const Vec& p : out.particles)
      if (p[0] > 0.5) count1 += 1.0;
  }
  CHECK(count1 / (2.0 * trials) == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("resample preserves the weighted mean in expectation") {
  ParticleBelief b;
  b.particles = {v2(0, 0), v2(1, 0), v2(0, 2)};
  b.weights = {0.2, 0.5, 0.3};
  const Vec target = b.mean();
  Vec acc = Vec::Zero(2);
  const int trials = 2000;
  for (int s = 0; s < trials; ++s) {
    RngStream rng(static_cast<std::uint64_t>(s), 8);
    acc += resample(b, rng).mean();
  }
  CHECK(((acc / trials) - target).norm() < 0.02 * target.norm());
}

TEST_CASE("map estimate: dominant particle and bimodal cloud") {
  ParticleBelief b;
  b.particles = {v2(0, 0), v2(5, 5), v2(-5, 5)};
  b.weights = {0.9, 0.05, 0.05};
  CHECK((map_estimate(b) - v2(0, 0)).norm() == 0.0);

  // 60/40 split of two tight clusters: MAP must land in the larger one
  ParticleBelief bi;
  RngStream rng(4, 9);
  for (int i = 0; i < 60; ++i)
    bi.particles.push_back(v2(1.0 + 0.01 * rng.gaussian(),
                              0.01 * rng.gaussian()));
  for (int i = 0; i < 40; ++i)
    bi.particles.push_back(v2(-1.0 + 0.01 * rng.gaussian(),
                              0.01 * rng.gaussian()));
  bi.weights.assign(100, 0.01);
  CHECK(map_estimate(bi)[0] > 0.5);

  ParticleBelief single = ParticleBelief::uniform({v2(3, 4)});
  CHECK((map_estimate(single) - v2(3, 4)).norm() == 0.0);
}

TEST_CASE("goal probability counts weight inside the radius") {
  ParticleBelief b = ParticleBelief::uniform(
      {v2(0, 0), v2(0.1, 0), v2(5, 5), v2(-5, -5)});
  Vec goal = v2(0, 0);
  CHECK(goal_probability(b, goal, 0.3) == doctest::Approx(0.5));
  CHECK(goal_probability(b, v2(100, 100), 0.3) == doctest::Approx(0.0));
  ParticleBelief at = ParticleBelief::uniform({v2(1, 1), v2(1, 1)});
  CHECK(goal_probability(at, v2(1, 1), 0.1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(goal_probability(b, goal, 0.0), DimensionError);
}

TEST_CASE("effective sample size") {
  ParticleBelief b;
  b.particles = {v2(0, 0), v2(1, 0), v2(2, 0), v2(3, 0)};
  b.weights = {0.25, 0.25, 0.25, 0.25};
  CHECK(effective_sample_size(b) == doctest::Approx(4.0));
  b.weights = {1.0, 0.0, 0.0, 0.0};
  CHECK(effective_sample_size(b) == doctest::Approx(1.0));
  b.weights = {0.5, 0.5, 0.0, 0.0};
  CHECK(effective_sample_size(b) == doctest::Approx(2.0));
}

TEST_CASE("linear-Gaussian agreement with a Kalman filter") {
  // direct-position readings make the whole chain linear-Gaussian
  const double dt = 0.1, psig = 0.05, osig = 0.1;
  ProcessModel m =
      ProcessModel::single_integrator(dt, Vec::Constant(2, psig), 5.0);
  ObservationModel obs(ObservationModel::Kind::Position, {Vec2(0.0, 0.0)},
                       Vec::Constant(2, osig));
  Vec u(2);
  u << 0.5, 0.3;
  Vec m0 = v2(2.0, 1.5);
  const Mat Q = std::pow(psig, 2) * dt * Mat::Identity(2, 2);
  const Mat R = std::pow(osig, 2) * Mat::Identity(2, 2);

  double rel_err_sum = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    RngStream init(seed, 1), sim(seed, 2), filt(seed, 3);
    ParticleBelief b = ParticleBelief::sampled(m0, Vec::Constant(2, 0.2),
                                               5000, init);
    oracles::KalmanState kf{m0, 0.04 * Mat::Identity(2, 2)};
    Vec x_true = m0;
    for (int t = 0; t < 10; ++t) {
      x_true = m.step(x_true, u, sim.gaussian_vec(2));
      Vec z = obs.observe(x_true, osig * sim.gaussian_vec(2));
      b = update(predict(b, m, u, filt), obs, z);
      kf = oracles::kalman_predict(kf, Mat::Identity(2, 2),
                                   dt * Mat::Identity(2, 2), u, Q);
      kf = oracles::kalman_update(kf, Mat::Identity(2, 2), R, z, Vec::Zero(2));
      if (effective_sample_size(b) < 2500.0) b = resample(b, filt);
    }
    rel_err_sum += (b.mean() - kf.mean).norm() / kf.mean.norm();
  }
  CHECK(rel_err_sum / seeds < 0.05);
}

TEST_CASE("belief validation") {
  ParticleBelief b;
  b.particles = {v2(0, 0)};
  b.weights = {0.5};
  CHECK_THROWS_AS(b.validate(), DimensionError);
  b.weights = {-1.0};
  CHECK_THROWS_AS(b.validate(), DimensionError);
}
