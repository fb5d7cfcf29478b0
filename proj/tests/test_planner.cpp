#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "slap/planner.hpp"

using namespace slap;

namespace {

PlanningProblem convex_problem(int K, int n_particles, std::uint64_t seed,
                               const Vec2& goal, double max_u = 1.0,
                               double goal_weight = 1e4) {
  PlanningProblem p{ProcessModel::single_integrator(0.1, Vec::Constant(2, 0.05),
                                                    max_u),
                    ObservationModel(ObservationModel::Kind::RangeBearing,
                                     {Vec2(1.0, 0.8)}, Vec::Constant(2, 0.1))};
  RngStream rng(seed, 1);
  p.x0 = Vec::Zero(2);
  for (int i = 0; i < n_particles; ++i)
    p.particles.push_back(p.x0 + 0.05 * rng.gaussian_vec(2));
  p.goal = goal;
  p.horizon = K;
  p.effort_weight = Mat::Identity(2, 2);
  p.goal_weight = goal_weight;
  p.mode = EnvMode::Convex;
  p.info_enabled = false;
  return p;
}

Ellipsoid circle(double cx, double cy, double r) {
  return Ellipsoid::from_cp(Vec2(cx, cy), Mat2::Identity() / (r * r));
}

ControlSequence zero_seed(int K, int m) {
  return ControlSequence(static_cast<std::size_t>(K), Vec::Zero(m));
}

}  // namespace

TEST_CASE("solve_open_loop matches the closed-form penalized LQ oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(seed, 9);
    const Vec2 goal(0.3 * rng.uniform() + 0.05, 0.3 * rng.uniform() - 0.15);
    PlanningProblem p = convex_problem(10, 30, seed, goal);
    SolverConfig cfg;
    cfg.kkt_tol = 1e-8;
    const PlanResult res = solve_open_loop(p, zero_seed(10, 2), cfg);

    const oracles::LqSolution lq = oracles::lq_penalized(
        p.x0.head<2>(), goal, 10, 0.1, Mat::Identity(2, 2), p.goal_weight);
    CHECK(std::abs(res.cost.total - lq.cost) <=
          1e-4 * std::max(1.0, std::abs(lq.cost)));
    CHECK((res.nominal.back().head<2>() - lq.terminal_state.head<2>()).norm() < 1e-3);
    for (std::size_t t = 0; t < res.controls.size(); ++t)
      CHECK((res.controls[t] - lq.controls[t]).norm() < 1e-3);
  }
}

TEST_CASE("solve improves on the seed and respects saturation") {
  // unreachable goal: the penalty continuation kicks in, so compare terminal
  // errors rather than costs evaluated under different penalty weights
  PlanningProblem p = convex_problem(12, 40, 3, Vec2(2.0, -1.5), 0.8);
  const ControlSequence seed = zero_seed(12, 2);
  const PlanResult res = solve_open_loop(p, seed, SolverConfig{});
  const double seed_err = (p.x0.head<2>() - p.goal.head<2>()).norm();
  const double res_err =
      (res.nominal.back().head<2>() - p.goal.head<2>()).norm();
  CHECK(res_err < seed_err);
  for (const Vec& u : res.controls) CHECK(u.norm() <= 0.8 + 1e-12);
  // every step saturates when the goal is out of reach
  for (const Vec& u : res.controls) CHECK(u.norm() > 0.8 - 1e-6);
}

TEST_CASE("first-order optimality at the solution") {
  PlanningProblem p = convex_problem(10, 30, 11, Vec2(0.25, 0.1));
  SolverConfig cfg;
  cfg.kkt_tol = 1e-8;
  const PlanResult res = solve_open_loop(p, zero_seed(10, 2), cfg);
  const Vec g = objective_gradient(p, res.controls);
  CHECK(detail::projected_gradient_norm(res.controls, g,
                                        p.process.max_u()) < 1e-5);
}

TEST_CASE("an optimal seed is a fixed point") {
  PlanningProblem p = convex_problem(10, 30, 5, Vec2(0.2, 0.15));
  SolverConfig cfg;
  cfg.kkt_tol = 1e-9;
  const PlanResult first = solve_open_loop(p, zero_seed(10, 2), cfg);
  const PlanResult again = solve_open_loop(p, first.controls, cfg);
  for (std::size_t t = 0; t < first.controls.size(); ++t)
    CHECK((first.controls[t] - again.controls[t]).norm() < 1e-6);
}

TEST_CASE("a seed running through a barrier singularity is rejected") {
  PlanningProblem p = convex_problem(1, 20, 2, Vec2(5.0, 0.0), 100.0);
  p.x0 = Vec2(-5.0, 0.0);
  p.particles.assign(20, p.x0);
  p.mode = EnvMode::Static;
  p.obstacle_schedule = {{circle(0.0, 0.0, 0.4)}};
  // the single segment (-5,0) -> (5,0) has a midpoint sample exactly on the
  // obstacle center, which is a capped singular point of the barrier
  ControlSequence seed = {Vec2(100.0, 0.0)};
  CHECK_THROWS_AS(solve_open_loop(p, seed, SolverConfig{}),
                  InfeasibleSeedError);
}

TEST_CASE("homotopy seeds keep their signatures through optimization") {
  std::vector<Ellipsoid> obs = {circle(0.5, 0.0, 0.35)};
  PlanningProblem p = convex_problem(0, 30, 7, Vec2(1.5, 0.0));
  p.x0 = Vec2(-0.5, 0.0);
  p.particles.clear();
  RngStream rng(7, 1);
  for (int i = 0; i < 30; ++i)
    p.particles.push_back(p.x0 + 0.05 * rng.gaussian_vec(2));
  p.mode = EnvMode::Static;
  p.obstacle_schedule = {obs};

  VisibilityGraph g =
      build_visibility_graph(p.x0.head<2>(), p.goal.head<2>(), obs, 0.08);
  const auto paths = enumerate_paths(g, obs, 2);
  REQUIRE(paths.size() == 2);
  std::vector<PathSignature> sigs;
  for (const auto& path : paths) {
    InitialTrajectory seed = discretize(path, p.process, obs);
    PlanningProblem q = p;
    q.horizon = static_cast<int>(seed.controls.size());
    q.obstacle_schedule.assign(static_cast<std::size_t>(q.horizon) + 2, obs);
    const PlanResult res = solve_open_loop(q, seed.controls, SolverConfig{},
                                           &seed.sig);
    CHECK(res.kept_seed_signature);
    CHECK(res.sig == seed.sig);
    CHECK_FALSE(res.barrier_violation);
    sigs.push_back(res.sig);
  }
  CHECK(sigs[0] != sigs[1]);
}

TEST_CASE("best_over_homotopy picks the cheaper class") {
  std::vector<Ellipsoid> obs = {circle(0.5, 0.25, 0.35)};
  PlanningProblem p = convex_problem(0, 30, 13, Vec2(1.5, 0.0));
  p.x0 = Vec2(-0.5, 0.0);
  p.particles.assign(30, p.x0);
  p.mode = EnvMode::Static;
  p.obstacle_schedule = {obs};

  VisibilityGraph g =
      build_visibility_graph(p.x0.head<2>(), p.goal.head<2>(), obs, 0.08);
  const auto paths = enumerate_paths(g, obs, 2);
  REQUIRE(paths.size() == 2);
  std::vector<InitialTrajectory> seeds;
  int max_k = 0;
  for (const auto& path : paths) {
    seeds.push_back(discretize(path, p.process, obs));
    max_k = std::max(max_k, static_cast<int>(seeds.back().controls.size()));
  }
  p.obstacle_schedule.assign(static_cast<std::size_t>(max_k) + 2, obs);
  const PlanResult best = best_over_homotopy(p, seeds, SolverConfig{});
  // the obstacle sits above the start-goal line, so the low road is cheaper
  double best_cost = std::numeric_limits<double>::infinity();
  PathSignature best_sig;
  for (const InitialTrajectory& seed : seeds) {
    PlanningProblem q = p;
    q.horizon = static_cast<int>(seed.controls.size());
    q.obstacle_schedule.assign(static_cast<std::size_t>(q.horizon) + 2, obs);
    const PlanResult r = solve_open_loop(q, seed.controls, SolverConfig{},
                                         &seed.sig);
    if (r.cost.total < best_cost) {
      best_cost = r.cost.total;
      best_sig = r.sig;
    }
  }
  CHECK(best.cost.total == doctest::Approx(best_cost));
  CHECK(best.sig == best_sig);
}

TEST_CASE("best_over_homotopy requires at least one seed") {
  PlanningProblem p = convex_problem(5, 10, 1, Vec2(0.2, 0.0));
  CHECK_THROWS_AS(best_over_homotopy(p, {}, SolverConfig{}),
                  InfeasibleSeedError);
}

TEST_CASE("predict_obstacle_schedule") {
  ObstacleTrack still{circle(1.0, 0.0, 0.5)};
  ObstacleTrack mover{circle(0.0, 0.0, 0.3), Vec2(0.5, -0.25)};
  const auto sched = predict_obstacle_schedule({still, mover}, 0.2, 10);
  REQUIRE(sched.size() == 12);  // offsets 0..K+1
  for (int k = 0; k < 12; ++k) {
    CHECK((sched[k][0].c - Vec2(1.0, 0.0)).norm() < 1e-12);
    CHECK((sched[k][1].c - Vec2(0.1 * k, -0.05 * k)).norm() < 1e-12);
    CHECK((sched[k][1].P - mover.base.P).norm() < 1e-12);
  }
}

TEST_CASE("rhc policy: belief at the goal commands (almost) nothing") {
  RhcConfig cfg{ProcessModel::single_integrator(0.1, Vec::Constant(2, 0.02),
                                                1.0),
                ObservationModel(ObservationModel::Kind::RangeBearing,
                                 {Vec2(0.0, 1.0)}, Vec::Constant(2, 0.1))};
  cfg.goal = Vec2(0.7, 0.4);
  cfg.horizon = 10;
  cfg.effort_weight = Mat::Identity(2, 2);
  cfg.info_enabled = false;
  RngStream rng(21, 3);
  ParticleBelief b = ParticleBelief::sampled(cfg.goal, Vec::Constant(2, 1e-4),
                                             100, rng);
  const Vec u = rhc_policy(b, {}, cfg, rng);
  CHECK(u.norm() < 1e-3);
}

TEST_CASE("rhc policy: one-step problem matches the hand solution") {
  const double dt = 0.1;
  const double lambda = 1e6;
  RhcConfig cfg{ProcessModel::single_integrator(dt, Vec::Constant(2, 0.02),
                                                1.0),
                ObservationModel(ObservationModel::Kind::RangeBearing,
                                 {Vec2(0.0, 1.0)}, Vec::Constant(2, 0.1))};
  cfg.goal = Vec2(0.05, 0.02);
  cfg.horizon = 1;
  cfg.effort_weight = Mat::Identity(2, 2);
  cfg.goal_weight = lambda;
  cfg.info_enabled = false;
  RngStream rng(4, 3);
  ParticleBelief b = ParticleBelief::sampled(Vec::Zero(2),
                                             Vec::Constant(2, 1e-5), 50, rng);
  const Vec x_hat = map_estimate(b);
  const Vec u = rhc_policy(b, {}, cfg, rng);
  // argmin u'u + lambda ||x + u dt - g||^2
  const Vec expected =
      lambda * dt * (cfg.goal - x_hat.head<2>()) / (1.0 + lambda * dt * dt);
  CHECK((u - expected).norm() < 1e-3);
}

TEST_CASE("rhc policy is deterministic under a fixed stream") {
  RhcConfig cfg{ProcessModel::single_integrator(0.1, Vec::Constant(2, 0.05),
                                                1.0),
                ObservationModel(ObservationModel::Kind::RangeBearing,
                                 {Vec2(1.0, 1.0)}, Vec::Constant(2, 0.1))};
  cfg.goal = Vec2(1.0, 0.5);
  cfg.horizon = 12;
  cfg.effort_weight = Mat::Identity(2, 2);
  RngStream rng_a(77, 3);
  RngStream rng_b(77, 3);
  RngStream init(77, 1);
  ParticleBelief b = ParticleBelief::sampled(Vec::Zero(2),
                                             Vec::Constant(2, 0.1), 80, init);
  const Vec ua = rhc_policy(b, {}, cfg, rng_a);
  const Vec ub = rhc_policy(b, {}, cfg, rng_b);
  CHECK((ua - ub).norm() == 0.0);
}

TEST_CASE("rhc controller warm-starts across steps") {
  RhcConfig cfg{ProcessModel::single_integrator(0.1, Vec::Constant(2, 0.02),
                                                1.0),
                ObservationModel(ObservationModel::Kind::RangeBearing,
                                 {Vec2(0.5, 1.0)}, Vec::Constant(2, 0.1))};
  cfg.goal = Vec2(1.0, 0.0);
  cfg.horizon = 15;
  cfg.effort_weight = Mat::Identity(2, 2);
  cfg.info_enabled = false;
  RhcController ctrl(cfg);
  RngStream rng(5, 3);
  RngStream init(5, 1);
  ParticleBelief b = ParticleBelief::sampled(Vec::Zero(2),
                                             Vec::Constant(2, 0.02), 60, init);
  PlanResult r1, r2;
  const Vec u1 = ctrl.act(b, {}, rng, &r1);
  // advance the belief mean along the executed control and re-plan
  std::vector<Vec> moved;
  for (const Vec& x : b.particles)
    moved.push_back(x + 0.1 * u1);
  ParticleBelief b2 = ParticleBelief::uniform(moved);
  ctrl.act(b2, {}, rng, &r2);
  CHECK(r2.cost.total <= r1.cost.total + 1e-9);
}
