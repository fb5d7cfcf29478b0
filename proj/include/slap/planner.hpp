#ifndef SLAP_PLANNER_HPP
#define SLAP_PLANNER_HPP

#include "slap/belief.hpp"
#include "slap/homotopy.hpp"
#include "slap/objective.hpp"

#include <chrono>
#include <functional>

namespace slap {

struct SolverConfig {
  int max_outer = 40;
  int max_inner = 600;
  double armijo_init = 1.0;
  double armijo_backtrack = 0.5;
  double armijo_c = 1e-4;
  double step_cap_frac = 0.1;   // max line-search step, fraction of max_u
  double cost_tol = 1e-10;      // relative decrease convergence
  double kkt_tol = 1e-6;        // projected-gradient norm target
  double lambda_max = 1e6;      // terminal penalty continuation cap
  double terminal_tol = 0.01;   // meters

  void validate() const {
    if (max_outer < 1 || max_inner < 1 || armijo_init <= 0.0 ||
        armijo_backtrack <= 0.0 || armijo_backtrack >= 1.0 ||
        armijo_c <= 0.0 || step_cap_frac <= 0.0 || cost_tol <= 0.0 ||
        kkt_tol <= 0.0 || lambda_max <= 0.0 || terminal_tol <= 0.0)
      throw DimensionError("solver config: out of range");
  }
};

struct PlanResult {
  ControlSequence controls;
  std::vector<Vec> nominal;
  CostBreakdown cost;
  int iterations = 0;
  bool barrier_violation = false;
  PathSignature sig;
  bool kept_seed_signature = true;
  double wall_ms = 0.0;
};

namespace detail {

inline void project_saturation(ControlSequence& u, double max_u) {
  for (Vec& ut : u) {
    const double n = ut.norm();
    if (n > max_u) ut *= max_u / n;
  }
}

inline ControlSequence project_step(const ControlSequence& u, const Vec& dir,
                                    double alpha, double max_u) {
  const int nu = static_cast<int>(u.front().size());
  ControlSequence out = u;
  for (std::size_t t = 0; t < u.size(); ++t)
    out[t] -= alpha * dir.segment(static_cast<int>(t) * nu, nu);
  project_saturation(out, max_u);
  return out;
}

inline double projected_gradient_norm(const ControlSequence& u, const Vec& g,
                                      double max_u) {
  ControlSequence moved = project_step(u, g, 1.0, max_u);
  double n2 = 0.0;
  for (std::size_t t = 0; t < u.size(); ++t)
    n2 += (moved[t] - u[t]).squaredNorm();
  return std::sqrt(n2);
}

// Monotone spectral projected gradient with Armijo backtracking. Returns the
// number of accepted iterations.
using AcceptFn = std::function<bool(const ControlSequence&)>;

inline int spg_minimize(const ObjectiveEval& eval, ControlSequence& u,
                        double max_u, const SolverConfig& cfg,
                        double kkt_target, const AcceptFn& acceptable = {}) {
  const double step_cap = cfg.step_cap_frac * max_u;
  double f = eval.cost(u).total;
  Vec g = eval.gradient(u);
  double alpha_bb = cfg.armijo_init;
  int accepted = 0;
  for (int it = 0; it < cfg.max_inner; ++it) {
    if (projected_gradient_norm(u, g, max_u) < kkt_target) break;
    const double ginf = g.lpNorm<Eigen::Infinity>();
    double alpha = std::min(alpha_bb, ginf > 0.0 ? step_cap / ginf : alpha_bb);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      ControlSequence cand = project_step(u, g, alpha, max_u);
      Vec d = flatten(cand) - flatten(u);
      const double dn = d.norm();
      if (dn < 1e-16) break;
      const double fc = eval.cost(cand).total;
      if (fc <= f + cfg.armijo_c * g.dot(d) &&
          (!acceptable || acceptable(cand))) {
        Vec gc = eval.gradient(cand);
        // Barzilai-Borwein step for the next iterate
        const Vec y = gc - g;
        const double sy = d.dot(y);
        alpha_bb = sy > 1e-16 ? std::clamp(d.squaredNorm() / sy, 1e-8, 1e4)
                              : cfg.armijo_init;
        const double prev = f;
        u = std::move(cand);
        f = fc;
        g = std::move(gc);
        ++accepted;
        moved = true;
        if (std::abs(prev - f) <= cfg.cost_tol * (std::abs(prev) + 1e-12))
          return accepted;
        break;
      }
      alpha *= cfg.armijo_backtrack;
    }
    if (!moved) break;
  }
  return accepted;
}

}  // namespace detail

// Projected gradient descent with Armijo line search, re-linearization per
// outer iteration, and terminal-penalty continuation.
inline PlanResult solve_open_loop(const PlanningProblem& problem,
                                  ControlSequence seed,
                                  const SolverConfig& cfg,
                                  const PathSignature* seed_sig = nullptr) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  PlanningProblem p = problem;
  p.validate();
  if (static_cast<int>(seed.size()) != p.horizon)
    throw DimensionError("solve_open_loop: seed horizon mismatch");
  detail::project_saturation(seed, p.process.max_u());

  {
    const CostBreakdown c0 = total_objective(p, seed);
    if (!std::isfinite(c0.total) || c0.obstacle >= p.obf.cap)
      throw InfeasibleSeedError("solve_open_loop: seed is barrier-capped");
  }

  PlanResult res;
  res.controls = std::move(seed);
  int total_iters = 0;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    ObjectiveEval eval(p, res.controls);
    // keep every accepted line-search iterate in the seed's homotopy class;
    // without this guard large barrier gradients can drag the trajectory
    // across an obstacle into another class
    const auto make_keep_class = [&](const ObjectiveEval& ev) {
      detail::AcceptFn fn;
      if (seed_sig && p.mode != EnvMode::Convex)
        fn = [&p, seed_sig, &ev](const ControlSequence& cand) {
          const std::vector<Vec> xs = ev.nominal(cand);
          std::vector<Vec2> poly;
          poly.reserve(xs.size());
          for (const Vec& x : xs) poly.push_back(x.head<2>());
          return signature(poly, p.obstacle_schedule.front()) == *seed_sig;
        };
      return fn;
    };
    total_iters += detail::spg_minimize(eval, res.controls, p.process.max_u(),
                                        cfg, cfg.kkt_tol, make_keep_class(eval));
    const std::vector<Vec> xs = eval.nominal(res.controls);
    const double term_err = (xs.back().head<2>() - p.goal.head<2>()).norm();
    if (term_err > cfg.terminal_tol && p.goal_weight < cfg.lambda_max) {
      p.goal_weight = std::min(2.0 * p.goal_weight, cfg.lambda_max);
      continue;
    }
    // converged at this linearization; one extra outer pass refreshes the
    // linearization for nonlinear models (no-op for the affine ones)
    ObjectiveEval fresh(p, res.controls);
    if (detail::spg_minimize(fresh, res.controls, p.process.max_u(), cfg,
                             cfg.kkt_tol, make_keep_class(fresh)) == 0)
      break;
  }
  res.iterations = total_iters;

  ObjectiveEval eval(p, res.controls);
  res.cost = eval.cost(res.controls, res.barrier_violation);
  res.nominal = eval.nominal(res.controls);
  if (p.mode != EnvMode::Convex) {
    std::vector<Vec2> poly;
    poly.reserve(res.nominal.size());
    for (const Vec& x : res.nominal) poly.push_back(x.head<2>());
    const auto& obs0 = p.obstacle_schedule.front();
    res.sig = signature(poly, obs0);
    if (seed_sig) res.kept_seed_signature = (res.sig == *seed_sig);
  }
  res.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t_start)
                    .count();
  return res;
}

// Optimizes every homotopy seed and returns the lowest-cost result; ties
// break toward the shorter nominal path.
inline PlanResult best_over_homotopy(const PlanningProblem& p,
                                     const std::vector<InitialTrajectory>& seeds,
                                     const SolverConfig& cfg) {
  if (seeds.empty())
    throw InfeasibleSeedError("best_over_homotopy: no seeds");
  std::optional<PlanResult> best;
  double best_len = 0.0;
  std::string last_error = "all seeds infeasible";
  for (const InitialTrajectory& seed : seeds) {
    PlanningProblem q = p;
    q.horizon = static_cast<int>(seed.controls.size());
    // seed horizons can exceed the schedule built for the straight-line
    // horizon; pad by repeating the last predicted obstacle set
    if (!q.obstacle_schedule.empty() &&
        static_cast<int>(q.obstacle_schedule.size()) < q.horizon + 2)
      q.obstacle_schedule.resize(static_cast<std::size_t>(q.horizon) + 2,
                                 q.obstacle_schedule.back());
    try {
      PlanResult r = solve_open_loop(q, seed.controls, cfg, &seed.sig);
      double len = 0.0;
      for (std::size_t i = 0; i + 1 < r.nominal.size(); ++i)
        len += (r.nominal[i + 1].head<2>() - r.nominal[i].head<2>()).norm();
      if (!best || r.cost.total < best->cost.total ||
          (r.cost.total == best->cost.total && len < best_len)) {
        best = std::move(r);
        best_len = len;
      }
    } catch (const InfeasibleSeedError& err) {
      last_error = err.what();
    }
  }
  if (!best) throw InfeasibleSeedError(last_error);
  return *best;
}

// Predicted obstacle sets for time offsets 0..K+1 from the tracked motion.
inline std::vector<std::vector<Ellipsoid>> predict_obstacle_schedule(
    const std::vector<ObstacleTrack>& tracks, double dt, int K) {
  std::vector<std::vector<Ellipsoid>> schedule;
  schedule.reserve(static_cast<std::size_t>(K) + 2);
  for (int k = 0; k <= K + 1; ++k) {
    std::vector<Ellipsoid> obs;
    obs.reserve(tracks.size());
    for (const ObstacleTrack& t : tracks)
      obs.push_back(predict_obstacle(t, k * dt));
    schedule.push_back(std::move(obs));
  }
  return schedule;
}

// Everything the receding-horizon policy needs besides the live belief and
// obstacle tracks.
struct RhcConfig {
  ProcessModel process;
  ObservationModel observation;
  Vec goal;
  int horizon = 0;  // 0 = auto from the first seed discretization
  Mat effort_weight;
  double goal_weight = 1e3;
  double info_weight = 1.0;
  EnvMode mode = EnvMode::Convex;
  ObfParams obf;
  bool info_enabled = true;
  int plan_particles = 50;
  SolverConfig solver;
  int homotopy_k = 8;
  double homotopy_delta = 0.05;
  double discretize_slack = 1.3;
  std::vector<std::vector<Vec2>> explicit_seeds;  // optional initial polylines
};

// RHC policy: resample, build the open-loop problem at the current MAP
// estimate, warm-start from the shifted previous solution, solve, and return
// the first action.
class RhcController {
 public:
  explicit RhcController(RhcConfig cfg) : cfg_(std::move(cfg)) {}

  int horizon() const { return horizon_; }

  Vec act(const ParticleBelief& belief,
          const std::vector<ObstacleTrack>& tracks, RngStream& rng,
          PlanResult* result_out = nullptr) {
    ParticleBelief resampled = resample(belief, rng);
    ParticleBelief plan_set =
        cfg_.plan_particles < resampled.size()
            ? resample(resampled, rng, cfg_.plan_particles)
            : resampled;
    const Vec x_map = map_estimate(belief);

    if (horizon_ == 0) horizon_ = initial_horizon(x_map);
    PlanningProblem p{cfg_.process, cfg_.observation};
    p.particles = plan_set.particles;
    p.x0 = x_map;
    p.goal = cfg_.goal;
    p.horizon = horizon_;
    p.effort_weight = cfg_.effort_weight;
    p.goal_weight = cfg_.goal_weight;
    p.info_weight = cfg_.info_weight;
    p.mode = cfg_.mode;
    p.obf = cfg_.obf;
    p.info_enabled = cfg_.info_enabled;
    if (cfg_.mode != EnvMode::Convex)
      p.obstacle_schedule =
          predict_obstacle_schedule(tracks, cfg_.process.dt(), horizon_);

    PlanResult res;
    if (prev_) {
      ControlSequence warm = shifted(*prev_);
      repair_warm_start(p, warm, x_map);
      res = solve_open_loop(p, warm, cfg_.solver);
    } else {
      res = first_solve(p, x_map);
      horizon_ = static_cast<int>(res.controls.size());
    }
    prev_ = res.controls;
    if (result_out) *result_out = res;
    return res.controls.front();
  }

  void reset() {
    prev_.reset();
    horizon_ = cfg_.horizon;
  }

 private:
  ControlSequence shifted(const ControlSequence& u) const {
    ControlSequence out(u.begin() + 1, u.end());
    out.push_back(Vec::Zero(cfg_.process.control_dim()));
    return out;
  }

  int initial_horizon(const Vec& x_map) const {
    if (cfg_.horizon > 0) return cfg_.horizon;
    const std::vector<Vec2> line{x_map.head<2>(), Vec2(cfg_.goal.head<2>())};
    return static_cast<int>(
        discretize(line, cfg_.process, {}, 0, cfg_.discretize_slack)
            .controls.size());
  }

  ControlSequence straight_seed(const PlanningProblem& p,
                                const Vec& x_map) const {
    const std::vector<Vec2> line{x_map.head<2>(), Vec2(p.goal.head<2>())};
    auto traj = discretize(line, cfg_.process,
                           p.obstacle_schedule.empty()
                               ? std::vector<Ellipsoid>{}
                               : p.obstacle_schedule.front(),
                           p.horizon, cfg_.discretize_slack,
                           cfg_.process.has_heading() ? x_map[2] : 0.0);
    return traj.controls;
  }

  std::vector<InitialTrajectory> homotopy_seeds(const PlanningProblem& p,
                                                const Vec& x_map) const {
    std::vector<InitialTrajectory> seeds;
    const auto& obs = p.obstacle_schedule.front();
    const double heading = cfg_.process.has_heading() ? x_map[2] : 0.0;
    if (!cfg_.explicit_seeds.empty()) {
      for (const auto& poly : cfg_.explicit_seeds)
        seeds.push_back(discretize(poly, cfg_.process, obs, cfg_.horizon,
                                   cfg_.discretize_slack, heading));
      return seeds;
    }
    VisibilityGraph g = build_visibility_graph(x_map.head<2>(),
                                               p.goal.head<2>(), obs,
                                               cfg_.homotopy_delta);
    for (const auto& poly : enumerate_paths(g, obs, cfg_.homotopy_k))
      seeds.push_back(discretize(poly, cfg_.process, obs, cfg_.horizon,
                                 cfg_.discretize_slack, heading));
    return seeds;
  }

  PlanResult first_solve(const PlanningProblem& p, const Vec& x_map) const {
    if (cfg_.mode == EnvMode::Static || !cfg_.explicit_seeds.empty()) {
      if (cfg_.mode != EnvMode::Convex)
        return best_over_homotopy(p, homotopy_seeds(p, x_map), cfg_.solver);
    }
    return solve_open_loop(p, straight_seed(p, x_map), cfg_.solver);
  }

  // A newly appeared obstacle can leave the warm start barrier-capped on
  // part of the horizon; reroute only that span when it is interior, else
  // fall back to a fresh straight-line seed.
  void repair_warm_start(const PlanningProblem& p, ControlSequence& warm,
                         const Vec& x_map) const {
    if (p.mode == EnvMode::Convex) return;
    ObjectiveEval eval(p, warm);
    const std::vector<Vec> xs = eval.nominal(warm);
    std::vector<bool> capped(xs.size(), false);
    bool any = false;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const auto& obs = p.obstacle_schedule[std::min(
          t, p.obstacle_schedule.size() - 1)];
      BarrierField field(obs, p.obf);
      for (const Vec2& bp : p.process.body_points(xs[t]))
        if (field.capped_at(bp) || contains_any(obs, bp)) capped[t] = true;
      any = any || capped[t];
    }
    if (!any) return;

    std::size_t first = 0, last = 0;
    bool contiguous = true, in_span = false, done = false;
    for (std::size_t t = 0; t < capped.size(); ++t) {
      if (capped[t]) {
        if (done) contiguous = false;
        if (!in_span) first = t;
        last = t;
        in_span = true;
      } else if (in_span) {
        in_span = false;
        done = true;
      }
    }
    if (contiguous && first > 0 && last + 1 < xs.size()) {
      try {
        const std::size_t mid = (first + last) / 2;
        const auto& obs = p.obstacle_schedule[std::min(
            mid, p.obstacle_schedule.size() - 1)];
        VisibilityGraph g = build_visibility_graph(
            xs[first - 1].head<2>(), xs[last + 1].head<2>(), obs,
            cfg_.homotopy_delta);
        auto detour = enumerate_paths(g, obs, 1).front();
        splice_detour(p, warm, xs, first - 1, last + 1, detour);
        return;
      } catch (const DegenerateGeometryError&) {
        // fall through to the full re-seed
      }
    }
    warm = straight_seed(p, x_map);
  }

  void splice_detour(const PlanningProblem& p, ControlSequence& warm,
                     const std::vector<Vec>& xs, std::size_t a, std::size_t b,
                     const std::vector<Vec2>& detour) const {
    // resample the detour into b-a equal steps and invert the linear step
    std::vector<double> cum{0.0};
    for (std::size_t i = 0; i + 1 < detour.size(); ++i)
      cum.push_back(cum.back() + (detour[i + 1] - detour[i]).norm());
    const double total = cum.back();
    const std::size_t steps = b - a;
    const Mat Bdt = p.process.input_matrix() * p.process.dt();
    const Mat pinv = Bdt.completeOrthogonalDecomposition().pseudoInverse();
    Vec prev = xs[a];
    for (std::size_t s = 1; s <= steps; ++s) {
      const double arc = total * static_cast<double>(s) / steps;
      std::size_t i = 1;
      while (i + 1 < cum.size() && cum[i] < arc) ++i;
      const double seg = cum[i] - cum[i - 1];
      const double t = seg > 0.0 ? (arc - cum[i - 1]) / seg : 0.0;
      Vec next = prev;
      next.head<2>() = detour[i - 1] + t * (detour[i] - detour[i - 1]);
      Vec u = pinv * (next - prev);
      const double n = u.norm();
      if (n > p.process.max_u()) u *= p.process.max_u() / n;
      warm[a + s - 1] = u;
      prev = next;
    }
  }

  static bool contains_any(const std::vector<Ellipsoid>& obs, const Vec2& x) {
    for (const Ellipsoid& e : obs)
      if (contains(e, x)) return true;
    return false;
  }

  RhcConfig cfg_;
  std::optional<ControlSequence> prev_;
  int horizon_ = 0;
};

// Functional form of the policy for one-shot use.
inline Vec rhc_policy(const ParticleBelief& belief,
                      const std::vector<ObstacleTrack>& tracks,
                      const RhcConfig& cfg, RngStream& rng,
                      PlanResult* result_out = nullptr) {
  RhcController ctrl(cfg);
  return ctrl.act(belief, tracks, rng, result_out);
}

}  // namespace slap

#endif  // SLAP_PLANNER_HPP
