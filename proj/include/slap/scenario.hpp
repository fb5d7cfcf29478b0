#ifndef SLAP_SCENARIO_HPP
#define SLAP_SCENARIO_HPP

#include "slap/planner.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>

namespace slap {

using Json = nlohmann::ordered_json;

// Ground-truth motion of one obstacle. The planner never sees this directly;
// it gets a linearized ObstacleTrack estimate refreshed every step.
struct TrackSpec {
  enum class Type { Static, Linear, Spiral };
  Type type = Type::Static;
  Vec2 velocity = Vec2::Zero();
  double rotation_rate = 0.0;
  // spiral: center(t) = pivot + (radius0 + radius_rate t) * dir(omega t + phase)
  Vec2 pivot = Vec2::Zero();
  double radius0 = 0.0;
  double radius_rate = 0.0;
  double omega = 0.0;
  double phase = 0.0;
};

struct ScenarioObstacle {
  Ellipsoid base;          // MVEE of the (inflated) input geometry
  Polygon source_polygon;  // empty when given directly as an ellipse
  TrackSpec track;
};

struct Scenario {
  std::string name;
  std::string metadata;
  EnvMode mode = EnvMode::Static;
  std::uint64_t seed = 1;

  ProcessModel process = ProcessModel::single_integrator(
      0.1, Vec::Constant(2, 0.01), 1.0);
  ObservationModel observation{ObservationModel::Kind::RangeBearing,
                               {Vec2(0.0, 0.0)},
                               Vec::Constant(2, 0.1)};

  // initial belief: sampled Gaussian or explicit particles
  Vec belief_mean;
  Vec belief_sigma;
  int belief_count = 200;
  int plan_count = 50;
  std::vector<Vec> belief_particles;  // overrides sampling when nonempty
  std::optional<Vec> true_start;      // defaults to the belief mean

  Vec goal;
  Vec2 workspace_min = Vec2(-10, -10);
  Vec2 workspace_max = Vec2(10, 10);
  StoppingRule stop;

  std::vector<ScenarioObstacle> obstacles;
  double obstacle_noise = 0.0;  // std dev on published obstacle centers

  ObfParams obf;
  SolverConfig solver;
  double goal_weight = 1e3;
  double effort_weight = 1.0;
  double info_weight = 1.0;
  int horizon = 0;  // 0 = auto
  int homotopy_k = 8;
  double homotopy_delta = 0.05;
  double discretize_slack = 1.3;
  std::vector<std::vector<Vec2>> explicit_seeds;
  bool info_cost = true;
};

// Ground-truth obstacle pose at time t (seconds).
inline Ellipsoid obstacle_pose(const ScenarioObstacle& ob, double t) {
  switch (ob.track.type) {
    case TrackSpec::Type::Static:
      return ob.base;
    case TrackSpec::Type::Linear: {
      ObstacleTrack tr{ob.base, ob.track.velocity, ob.track.rotation_rate};
      return predict_obstacle(tr, t);
    }
    case TrackSpec::Type::Spiral: {
      const TrackSpec& s = ob.track;
      const double ang = s.omega * t + s.phase;
      const double rad = s.radius0 + s.radius_rate * t;
      const Vec2 c = s.pivot + rad * Vec2(std::cos(ang), std::sin(ang));
      return Ellipsoid::from_cp(c, ob.base.P);
    }
  }
  return ob.base;
}

// Linearized track estimate handed to the planner: current pose plus a
// finite-difference velocity, optionally perturbed to emulate tracker error.
inline ObstacleTrack obstacle_estimate(const ScenarioObstacle& ob, double t,
                                       double dt, double noise,
                                       RngStream* rng) {
  const Ellipsoid now = obstacle_pose(ob, t);
  const Ellipsoid next = obstacle_pose(ob, t + dt);
  ObstacleTrack tr;
  tr.base = now;
  tr.velocity = (next.c - now.c) / dt;
  tr.rotation_rate =
      ob.track.type == TrackSpec::Type::Linear ? ob.track.rotation_rate : 0.0;
  if (noise > 0.0 && rng) {
    tr.base = Ellipsoid::from_cp(
        now.c + noise * Vec2(rng->gaussian(), rng->gaussian()), now.P);
  }
  return tr;
}

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw ScenarioError("scenario: " + path + ": " + msg);
}

inline const Json& at(const Json& j, const std::string& key,
                      const std::string& path) {
  if (!j.contains(key)) fail(path + "/" + key, "missing required field");
  return j.at(key);
}

inline double num(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

inline Vec vec(const Json& j, const std::string& path, int expected = -1) {
  if (!j.is_array()) fail(path, "expected an array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<int>(i)] = num(j[i], path + "[" + std::to_string(i) + "]");
  if (expected >= 0 && v.size() != expected)
    fail(path, "expected " + std::to_string(expected) + " entries");
  return v;
}

inline Vec2 point(const Json& j, const std::string& path) {
  const Vec v = vec(j, path, 2);
  return Vec2(v[0], v[1]);
}

inline std::vector<Vec2> point_list(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of points");
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(point(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

inline Scenario parse_scenario(const Json& j) {
  using detail::at;
  using detail::fail;
  using detail::num;
  using detail::point;
  using detail::point_list;
  using detail::vec;

  Scenario s;
  s.name = j.value("name", "scenario");
  if (j.contains("metadata")) s.metadata = j.at("metadata").dump();
  s.seed = j.value("seed", 1u);

  const std::string mode = at(j, "mode", "").get<std::string>();
  if (mode == "convex")
    s.mode = EnvMode::Convex;
  else if (mode == "static")
    s.mode = EnvMode::Static;
  else if (mode == "dynamic")
    s.mode = EnvMode::Dynamic;
  else
    fail("/mode", "must be convex | static | dynamic");

  {
    const Json& p = at(j, "process", "");
    const std::string type = at(p, "type", "/process").get<std::string>();
    const double dt = num(at(p, "dt", "/process"), "/process/dt");
    const double max_u = num(at(p, "max_u", "/process"), "/process/max_u");
    BodyCover body;
    if (p.contains("body")) {
      const Json& b = p.at("body");
      body.radius = num(at(b, "radius", "/process/body"), "/process/body/radius");
      if (b.contains("offsets")) {
        body.offsets.clear();
        for (const auto& o : b.at("offsets"))
          body.offsets.push_back(num(o, "/process/body/offsets"));
      }
    }
    if (type == "single_integrator") {
      s.process = ProcessModel::single_integrator(
          dt, vec(at(p, "sigma", "/process"), "/process/sigma", 2), max_u,
          body);
    } else if (type == "youbot") {
      s.process = ProcessModel::youbot(
          dt, vec(at(p, "sigma", "/process"), "/process/sigma", 3), max_u,
          p.value("wheel_radius", 0.05), p.value("half_length", 0.28),
          p.value("half_width", 0.15), body);
    } else {
      fail("/process/type", "must be single_integrator | youbot");
    }
  }

  {
    const Json& o = at(j, "observation", "");
    const std::string kind = o.value("kind", "range_bearing");
    ObservationModel::Kind k;
    if (kind == "range_bearing")
      k = ObservationModel::Kind::RangeBearing;
    else if (kind == "range_only")
      k = ObservationModel::Kind::RangeOnly;
    else if (kind == "position")
      k = ObservationModel::Kind::Position;
    else
      fail("/observation/kind", "must be range_bearing | range_only | position");
    auto lms = point_list(at(o, "landmarks", "/observation"),
                          "/observation/landmarks");
    const Vec sigma = vec(at(o, "sigma", "/observation"), "/observation/sigma");
    const std::string weighting = o.value("weighting", "squared_distance");
    if (weighting != "squared_distance" && weighting != "unit")
      fail("/observation/weighting", "must be squared_distance | unit");
    s.observation = ObservationModel(
        k, std::move(lms), sigma,
        weighting == "unit" ? ObservationModel::Weighting::Unit
                            : ObservationModel::Weighting::SquaredDistance);
  }

  {
    const Json& b = at(j, "belief", "");
    s.belief_count = b.value("count", 200);
    s.plan_count = b.value("plan_count", 50);
    if (b.contains("particles")) {
      for (const auto& p : b.at("particles"))
        s.belief_particles.push_back(
            vec(p, "/belief/particles", s.process.state_dim()));
    } else {
      s.belief_mean = vec(at(b, "mean", "/belief"), "/belief/mean",
                          s.process.state_dim());
      s.belief_sigma = vec(at(b, "sigma", "/belief"), "/belief/sigma",
                           s.process.state_dim());
    }
    if (b.contains("true_start"))
      s.true_start =
          vec(b.at("true_start"), "/belief/true_start", s.process.state_dim());
  }

  s.goal = vec(at(j, "goal", ""), "/goal", s.process.state_dim());
  if (j.contains("workspace")) {
    const Json& w = j.at("workspace");
    if (!w.is_array() || w.size() != 2) fail("/workspace", "expected [min, max]");
    s.workspace_min = point(w[0], "/workspace[0]");
    s.workspace_max = point(w[1], "/workspace[1]");
  }
  if ((s.goal.head<2>().array() < s.workspace_min.array()).any() ||
      (s.goal.head<2>().array() > s.workspace_max.array()).any())
    fail("/goal", "goal lies outside the workspace");

  {
    const Json& st = at(j, "stop", "");
    s.stop.goal_radius = num(at(st, "radius", "/stop"), "/stop/radius");
    s.stop.weight_threshold =
        num(at(st, "w_threshold", "/stop"), "/stop/w_threshold");
    s.stop.max_steps = st.value("max_steps", 200);
    if (s.stop.goal_radius <= 0.0) fail("/stop/radius", "must be > 0");
    if (s.stop.weight_threshold <= 0.0 || s.stop.weight_threshold >= 1.0)
      fail("/stop/w_threshold", "must be in (0,1)");
  }

  if (j.contains("obf")) {
    const Json& o = j.at("obf");
    s.obf.amplitude = o.value("M", s.obf.amplitude);
    s.obf.exponent = o.value("q", s.obf.exponent);
    s.obf.axis_grid = o.value("m", s.obf.axis_grid);
    s.obf.cap = o.value("cap", s.obf.cap);
    s.obf.n_seg = o.value("n_seg", s.obf.n_seg);
    s.obf.interior_grid = o.value("interior_grid", false);
    s.obf.validate();
  }

  if (j.contains("solver")) {
    const Json& c = j.at("solver");
    s.solver.max_outer = c.value("max_outer", s.solver.max_outer);
    s.solver.max_inner = c.value("max_inner", s.solver.max_inner);
    s.solver.armijo_init = c.value("armijo_init", s.solver.armijo_init);
    s.solver.armijo_backtrack =
        c.value("armijo_backtrack", s.solver.armijo_backtrack);
    s.solver.armijo_c = c.value("armijo_c", s.solver.armijo_c);
    s.solver.step_cap_frac = c.value("step_cap_frac", s.solver.step_cap_frac);
    s.solver.cost_tol = c.value("cost_tol", s.solver.cost_tol);
    s.solver.kkt_tol = c.value("kkt_tol", s.solver.kkt_tol);
    s.solver.lambda_max = c.value("lambda_max", s.solver.lambda_max);
    s.solver.terminal_tol = c.value("terminal_tol", s.solver.terminal_tol);
    s.solver.validate();
  }
  s.goal_weight = j.value("goal_weight", 1e3);
  s.effort_weight = j.value("effort_weight", 1.0);
  s.info_weight = j.value("info_weight", 1.0);
  s.horizon = j.value("horizon", 0);
  s.info_cost = j.value("info_cost", true);
  s.obstacle_noise = j.value("obstacle_noise", 0.0);

  if (j.contains("homotopy")) {
    const Json& h = j.at("homotopy");
    s.homotopy_k = h.value("k", s.homotopy_k);
    s.homotopy_delta = h.value("delta", s.homotopy_delta);
    s.discretize_slack = h.value("slack", s.discretize_slack);
  }
  if (j.contains("seeds"))
    for (const auto& poly : j.at("seeds"))
      s.explicit_seeds.push_back(point_list(poly, "/seeds"));

  if (j.contains("obstacles")) {
    const Json& arr = j.at("obstacles");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Json& o = arr[i];
      const std::string path = "/obstacles[" + std::to_string(i) + "]";
      ScenarioObstacle ob;
      const double inflate_r = s.process.body().radius;
      if (o.contains("polygon")) {
        ob.source_polygon.vertices = point_list(o.at("polygon"), path + "/polygon");
        Polygon grown = inflate_r > 0.0 ? inflate(ob.source_polygon, inflate_r)
                                        : ob.source_polygon;
        ob.base = mvee(grown.vertices);
      } else if (o.contains("points")) {
        auto pts = point_list(o.at("points"), path + "/points");
        ob.base = mvee(pts);
        if (inflate_r > 0.0) {
          // grow the fitted ellipsoid: shrink P so the boundary moves out
          Eigen::SelfAdjointEigenSolver<Mat2> es(ob.base.P);
          Mat2 d = Mat2::Zero();
          for (int k = 0; k < 2; ++k) {
            const double axis = 1.0 / std::sqrt(es.eigenvalues()[k]);
            d(k, k) = 1.0 / ((axis + inflate_r) * (axis + inflate_r));
          }
          ob.base = Ellipsoid::from_cp(
              ob.base.c,
              es.eigenvectors() * d * es.eigenvectors().transpose());
        }
      } else if (o.contains("ellipse")) {
        const Json& e = o.at("ellipse");
        const Vec2 c = point(at(e, "c", path + "/ellipse"), path + "/ellipse/c");
        const Json& pm = at(e, "P", path + "/ellipse");
        if (!pm.is_array() || pm.size() != 2)
          fail(path + "/ellipse/P", "expected a 2x2 matrix");
        Mat2 P;
        for (int r = 0; r < 2; ++r) {
          const Vec row = vec(pm[static_cast<std::size_t>(r)],
                              path + "/ellipse/P", 2);
          P.row(r) = row.transpose();
        }
        ob.base = Ellipsoid::from_cp(c, P);
      } else {
        fail(path, "needs polygon | points | ellipse");
      }
      if (o.contains("track")) {
        const Json& t = o.at("track");
        const std::string type = t.value("type", "static");
        if (type == "static") {
          ob.track.type = TrackSpec::Type::Static;
        } else if (type == "linear") {
          ob.track.type = TrackSpec::Type::Linear;
          ob.track.velocity = point(at(t, "v", path + "/track"), path + "/track/v");
          ob.track.rotation_rate = t.value("alpha", 0.0);
        } else if (type == "spiral") {
          ob.track.type = TrackSpec::Type::Spiral;
          ob.track.pivot =
              point(at(t, "pivot", path + "/track"), path + "/track/pivot");
          ob.track.radius0 = t.value("radius0", 0.0);
          ob.track.radius_rate = t.value("radius_rate", 0.0);
          ob.track.omega = t.value("omega", 0.0);
          ob.track.phase = t.value("phase", 0.0);
        } else {
          fail(path + "/track/type", "must be static | linear | spiral");
        }
      }
      s.obstacles.push_back(std::move(ob));
    }
  }
  if (s.mode != EnvMode::Convex && s.obstacles.empty())
    fail("/obstacles", "static/dynamic mode requires obstacles");

  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ScenarioError("scenario: invalid JSON in " + path + ": " + e.what());
  }
  return parse_scenario(j);
}

inline ParticleBelief initial_belief(const Scenario& s, RngStream& rng) {
  if (!s.belief_particles.empty())
    return ParticleBelief::uniform(s.belief_particles);
  return ParticleBelief::sampled(s.belief_mean, s.belief_sigma,
                                 s.belief_count, rng);
}

inline Vec true_start_state(const Scenario& s) {
  if (s.true_start) return *s.true_start;
  if (!s.belief_particles.empty())
    return ParticleBelief::uniform(s.belief_particles).mean();
  return s.belief_mean;
}

inline RhcConfig make_rhc_config(const Scenario& s) {
  RhcConfig cfg{
      .process = s.process,
      .observation = s.observation,
      .goal = s.goal,
      .horizon = s.horizon,
      .effort_weight =
          s.effort_weight *
          Mat::Identity(s.process.control_dim(), s.process.control_dim()),
      .goal_weight = s.goal_weight,
      .info_weight = s.info_weight,
      .mode = s.mode,
      .obf = s.obf,
      .info_enabled = s.info_cost,
      .plan_particles = s.plan_count,
      .solver = s.solver,
      .homotopy_k = s.homotopy_k,
      .homotopy_delta = s.homotopy_delta,
      .discretize_slack = s.discretize_slack,
      .explicit_seeds = s.explicit_seeds,
  };
  return cfg;
}

}  // namespace slap

#endif  // SLAP_SCENARIO_HPP
