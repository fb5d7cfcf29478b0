#ifndef SLAP_SIMULATE_HPP
#define SLAP_SIMULATE_HPP

#include "slap/scenario.hpp"

namespace slap {

struct StepRecord {
  int step = 0;
  Vec true_state;
  Vec map_state;
  double goal_prob = 0.0;
  Vec control;
  Vec observation;
  CostBreakdown plan_cost;
  std::vector<Ellipsoid> obstacle_poses;
  bool barrier_violation = false;
  bool collision = false;
  double solve_ms = 0.0;
  std::vector<Vec> particle_snapshot;  // kept sparse to bound log size
};

struct RunLog {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string status;  // goal-reached | max-steps | error:<what>
  double final_goal_prob = 0.0;
  double initial_spread = 0.0;
  double terminal_spread = 0.0;
  double min_landmark_distance = 0.0;
  std::vector<StepRecord> steps;
  std::vector<Vec> initial_particles;
  std::vector<Vec2> seed_polyline;

  bool any_collision() const {
    for (const auto& r : steps)
      if (r.collision) return true;
    return false;
  }
};

namespace detail {

inline Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec json_vec(const Json& a) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i];
  return v;
}

inline Json ellipsoid_json(const Ellipsoid& e) {
  return Json{{"c", {e.c.x(), e.c.y()}},
              {"P", {{e.P(0, 0), e.P(0, 1)}, {e.P(1, 0), e.P(1, 1)}}}};
}

inline Ellipsoid json_ellipsoid(const Json& j) {
  Mat2 P;
  P << j["P"][0][0], j["P"][0][1], j["P"][1][0], j["P"][1][1];
  return Ellipsoid::from_cp(Vec2(j["c"][0], j["c"][1]), P);
}

// True body (covering balls) against a ground-truth ellipsoid. The boundary
// is sampled densely; exact ball/ellipse contact is not needed for the
// collision accounting.
inline bool body_hits_obstacle(const ProcessModel& model, const Vec& x,
                               const Ellipsoid& e) {
  for (const Vec2& bp : model.body_points(x)) {
    if (contains(e, bp)) return true;
    const double r = model.body().radius;
    if (r <= 0.0) continue;
    for (int k = 0; k < 64; ++k) {
      const double ang = 2.0 * M_PI * k / 64;
      if (contains(e, bp + r * Vec2(std::cos(ang), std::sin(ang)))) return true;
    }
  }
  return false;
}

}  // namespace detail

// Omits per-step solve timings unless asked to keep logs reproducible
// byte-for-byte under a fixed seed.
inline Json serialize_log(const RunLog& log, bool include_timing = false) {
  Json j;
  j["scenario"] = log.scenario;
  j["seed"] = log.seed;
  j["status"] = log.status;
  j["final_goal_prob"] = log.final_goal_prob;
  j["initial_spread"] = log.initial_spread;
  j["terminal_spread"] = log.terminal_spread;
  j["min_landmark_distance"] = log.min_landmark_distance;
  Json seedline = Json::array();
  for (const Vec2& p : log.seed_polyline) seedline.push_back({p.x(), p.y()});
  j["seed_polyline"] = seedline;
  Json parts = Json::array();
  for (const Vec& p : log.initial_particles) parts.push_back(detail::vec_json(p));
  j["initial_particles"] = parts;
  Json steps = Json::array();
  for (const StepRecord& r : log.steps) {
    Json s;
    s["step"] = r.step;
    s["true_state"] = detail::vec_json(r.true_state);
    s["map_state"] = detail::vec_json(r.map_state);
    s["goal_prob"] = r.goal_prob;
    s["control"] = detail::vec_json(r.control);
    s["observation"] = detail::vec_json(r.observation);
    s["cost"] = Json{{"info", r.plan_cost.info},
                     {"effort", r.plan_cost.effort},
                     {"obstacle", r.plan_cost.obstacle},
                     {"terminal", r.plan_cost.terminal},
                     {"total", r.plan_cost.total}};
    Json obs = Json::array();
    for (const Ellipsoid& e : r.obstacle_poses)
      obs.push_back(detail::ellipsoid_json(e));
    s["obstacles"] = obs;
    s["barrier_violation"] = r.barrier_violation;
    s["collision"] = r.collision;
    if (include_timing) s["solve_ms"] = r.solve_ms;
    Json snap = Json::array();
    for (const Vec& p : r.particle_snapshot) snap.push_back(detail::vec_json(p));
    s["particles"] = snap;
    steps.push_back(std::move(s));
  }
  j["steps"] = std::move(steps);
  return j;
}

inline RunLog parse_log(const Json& j) {
  RunLog log;
  log.scenario = j.at("scenario");
  log.seed = j.at("seed");
  log.status = j.at("status");
  log.final_goal_prob = j.at("final_goal_prob");
  log.initial_spread = j.at("initial_spread");
  log.terminal_spread = j.at("terminal_spread");
  log.min_landmark_distance = j.at("min_landmark_distance");
  for (const auto& p : j.at("seed_polyline"))
    log.seed_polyline.push_back(Vec2(p[0], p[1]));
  for (const auto& p : j.at("initial_particles"))
    log.initial_particles.push_back(detail::json_vec(p));
  for (const auto& s : j.at("steps")) {
    StepRecord r;
    r.step = s.at("step");
    r.true_state = detail::json_vec(s.at("true_state"));
    r.map_state = detail::json_vec(s.at("map_state"));
    r.goal_prob = s.at("goal_prob");
    r.control = detail::json_vec(s.at("control"));
    r.observation = detail::json_vec(s.at("observation"));
    r.plan_cost.info = s.at("cost").at("info");
    r.plan_cost.effort = s.at("cost").at("effort");
    r.plan_cost.obstacle = s.at("cost").at("obstacle");
    r.plan_cost.terminal = s.at("cost").at("terminal");
    r.plan_cost.total = s.at("cost").at("total");
    for (const auto& e : s.at("obstacles"))
      r.obstacle_poses.push_back(detail::json_ellipsoid(e));
    r.barrier_violation = s.at("barrier_violation");
    r.collision = s.at("collision");
    if (s.contains("solve_ms")) r.solve_ms = s.at("solve_ms");
    for (const auto& p : s.at("particles"))
      r.particle_snapshot.push_back(detail::json_vec(p));
    log.steps.push_back(std::move(r));
  }
  return log;
}

// One record per line, for streaming consumers.
inline std::string serialize_log_jsonl(const RunLog& log,
                                       bool include_timing = false) {
  const Json full = serialize_log(log, include_timing);
  std::string out;
  Json header = full;
  header.erase("steps");
  header["record"] = "header";
  out += header.dump() + "\n";
  for (const auto& s : full.at("steps")) {
    Json rec = s;
    rec["record"] = "step";
    out += rec.dump() + "\n";
  }
  return out;
}

// Closed-loop simulation of the plan/act/sense/update loop.
inline RunLog run_simulation(const Scenario& s,
                             std::optional<bool> info_override = std::nullopt,
                             int particle_snapshot_every = 0) {
  RunLog log;
  log.scenario = s.name;
  log.seed = s.seed;

  RngStream init_rng(s.seed, /*tag=*/1);
  ParticleBelief belief = initial_belief(s, init_rng);
  log.initial_particles = belief.particles;
  log.initial_spread = belief.covariance_trace();

  Vec x_true = true_start_state(s);
  RhcConfig cfg = make_rhc_config(s);
  if (info_override) cfg.info_enabled = *info_override;
  RhcController ctrl(cfg);

  const double dt = s.process.dt();
  double min_lm_dist = std::numeric_limits<double>::infinity();
  auto track_landmark_distance = [&](const Vec& x) {
    for (const Vec2& lm : s.observation.landmarks())
      min_lm_dist = std::min(min_lm_dist, (Vec2(x.head<2>()) - lm).norm());
  };
  track_landmark_distance(x_true);

  log.status = "max-steps";
  for (int step = 0; step < s.stop.max_steps; ++step) {
    const double p_goal = goal_probability(belief, s.goal, s.stop.goal_radius);
    if (p_goal > s.stop.weight_threshold) {
      log.status = "goal-reached";
      log.final_goal_prob = p_goal;
      break;
    }

    const double t_now = step * dt;
    std::vector<ObstacleTrack> tracks;
    RngStream track_rng(s.seed, /*tag=*/2, static_cast<std::uint64_t>(step));
    for (const ScenarioObstacle& ob : s.obstacles)
      tracks.push_back(
          obstacle_estimate(ob, t_now, dt, s.obstacle_noise, &track_rng));

    StepRecord rec;
    rec.step = step;
    PlanResult plan;
    try {
      RngStream plan_rng(s.seed, /*tag=*/3, static_cast<std::uint64_t>(step));
      rec.control = ctrl.act(belief, tracks, plan_rng, &plan);
    } catch (const Error& e) {
      log.status = std::string("error:") + e.what();
      log.final_goal_prob = p_goal;
      break;
    }
    rec.plan_cost = plan.cost;
    rec.barrier_violation = plan.barrier_violation;
    rec.solve_ms = plan.wall_ms;
    if (step == 0 && !plan.nominal.empty())
      for (const Vec& x : plan.nominal) log.seed_polyline.push_back(x.head<2>());

    RngStream process_rng(s.seed, /*tag=*/4, static_cast<std::uint64_t>(step));
    x_true = s.process.step(x_true, rec.control,
                            process_rng.gaussian_vec(s.process.noise_dim()));
    track_landmark_distance(x_true);

    const double t_next = (step + 1) * dt;
    for (const ScenarioObstacle& ob : s.obstacles) {
      const Ellipsoid pose = obstacle_pose(ob, t_next);
      rec.obstacle_poses.push_back(pose);
      if (detail::body_hits_obstacle(s.process, x_true, pose))
        rec.collision = true;
    }

    RngStream obs_rng(s.seed, /*tag=*/5, static_cast<std::uint64_t>(step));
    Vec nu = obs_rng.gaussian_vec(s.observation.obs_dim())
                 .cwiseProduct(s.observation.noise_sigma());
    rec.observation = s.observation.observe(x_true, nu);

    RngStream filter_rng(s.seed, /*tag=*/6, static_cast<std::uint64_t>(step));
    try {
      belief = update(predict(belief, s.process, rec.control, filter_rng),
                      s.observation, rec.observation);
    } catch (const FilterDivergenceError& e) {
      rec.true_state = x_true;
      rec.map_state = map_estimate(belief);
      rec.goal_prob = p_goal;
      log.steps.push_back(std::move(rec));
      log.status = std::string("error:") + e.what();
      break;
    }
    if (effective_sample_size(belief) < belief.size() / 2.0)
      belief = resample(belief, filter_rng);

    rec.true_state = x_true;
    rec.map_state = map_estimate(belief);
    rec.goal_prob = goal_probability(belief, s.goal, s.stop.goal_radius);
    if (particle_snapshot_every > 0 && step % particle_snapshot_every == 0)
      rec.particle_snapshot = belief.particles;
    log.final_goal_prob = rec.goal_prob;
    log.steps.push_back(std::move(rec));
  }
  log.terminal_spread = belief.covariance_trace();
  log.min_landmark_distance = min_lm_dist;
  return log;
}

struct ComparisonResult {
  RunLog with_info;
  RunLog without_info;
};

// Paired runs sharing every setting and RNG stream except the information
// cost toggle.
inline ComparisonResult run_comparison(const Scenario& s,
                                       int particle_snapshot_every = 0) {
  if (s.observation.landmarks().empty())
    throw ScenarioError("run_comparison: scenario needs a landmark");
  ComparisonResult r;
  r.with_info = run_simulation(s, true, particle_snapshot_every);
  r.without_info = run_simulation(s, false, particle_snapshot_every);
  return r;
}

}  // namespace slap

#endif  // SLAP_SIMULATE_HPP
