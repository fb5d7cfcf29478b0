#ifndef SLAP_OBJECTIVE_HPP
#define SLAP_OBJECTIVE_HPP

#include "slap/barrier.hpp"
#include "slap/models.hpp"

#include <optional>

namespace slap {

enum class EnvMode { Convex, Static, Dynamic };

struct CostBreakdown {
  double info = 0.0;
  double effort = 0.0;
  double obstacle = 0.0;
  double terminal = 0.0;
  double total = 0.0;
};

// One open-loop planning instance. Particles are the equal-weight
// (post-resample) set; the obstacle schedule holds the predicted obstacle
// sets for time offsets 0..K.
struct PlanningProblem {
  ProcessModel process;
  ObservationModel observation;
  std::vector<Vec> particles;
  Vec x0;  // MAP estimate at the start time
  Vec goal;
  int horizon = 10;
  Mat effort_weight;     // V^u, positive definite
  double goal_weight = 1e3;  // lambda_g
  EnvMode mode = EnvMode::Convex;
  std::vector<std::vector<Ellipsoid>> obstacle_schedule;
  ObfParams obf;
  bool info_enabled = true;
  double info_weight = 1.0;
  Vec2 workspace_min = Vec2(-1e9, -1e9);
  Vec2 workspace_max = Vec2(1e9, 1e9);

  void validate() const {
    if (horizon < 1) throw DimensionError("problem: horizon must be >= 1");
    if (particles.empty()) throw DimensionError("problem: no particles");
    if (goal_weight <= 0.0)
      throw DimensionError("problem: goal weight must be > 0");
    if (info_weight < 0.0)
      throw DimensionError("problem: info weight must be >= 0");
    if (effort_weight.rows() != process.control_dim())
      throw DimensionError("problem: effort weight size mismatch");
    Eigen::LLT<Mat> llt(effort_weight);
    if (llt.info() != Eigen::Success)
      throw DimensionError("problem: effort weight not positive definite");
    if (mode != EnvMode::Convex &&
        static_cast<int>(obstacle_schedule.size()) < horizon)
      throw DimensionError("problem: obstacle schedule shorter than horizon");
  }
};

inline Vec flatten(const ControlSequence& u) {
  if (u.empty()) return Vec();
  Vec out(static_cast<int>(u.size()) * u.front().size());
  for (std::size_t t = 0; t < u.size(); ++t)
    out.segment(static_cast<int>(t) * u.front().size(), u.front().size()) =
        u[t];
  return out;
}

inline ControlSequence unflatten(const Vec& v, int horizon, int n_u) {
  ControlSequence u(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t)
    u[static_cast<std::size_t>(t)] = v.segment(t * n_u, n_u);
  return u;
}

// Per-step linearizations along a reference rollout.
struct LinearizedPath {
  std::vector<Linearization> lin;  // size K
};

// Linearize about the zero-noise rollout of u_ref from the MAP state.
inline LinearizedPath linearize_about(const PlanningProblem& p,
                                      const ControlSequence& u_ref) {
  LinearizedPath lp;
  Vec x = p.x0;
  const Vec w0 = Vec::Zero(p.process.noise_dim());
  for (int t = 0; t < p.horizon; ++t) {
    const Vec& u = u_ref[static_cast<std::size_t>(t)];
    lp.lin.push_back(p.process.linearize(x, u));
    x = p.process.step(x, u, w0);
  }
  return lp;
}

// Affine propagation of the MAP state: K+1 nominal states.
inline std::vector<Vec> nominal_trajectory(const PlanningProblem& p,
                                           const LinearizedPath& lp,
                                           const ControlSequence& u) {
  std::vector<Vec> xs;
  xs.reserve(static_cast<std::size_t>(p.horizon) + 1);
  xs.push_back(p.x0);
  for (int t = 0; t < p.horizon; ++t) {
    const Linearization& l = lp.lin[static_cast<std::size_t>(t)];
    xs.push_back(l.A * xs.back() + l.B * u[static_cast<std::size_t>(t)] +
                 l.fp);
  }
  return xs;
}

// e^i_t = A~_{t':t-1} (x^i - x0) / sqrt(N), stored column-wise per time step.
struct DeviationBundle {
  std::vector<Mat> e;  // K+1 matrices, n_x x N
};

inline DeviationBundle deviation_bundle(const PlanningProblem& p,
                                        const LinearizedPath& lp) {
  const int n = static_cast<int>(p.particles.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Mat e0(p.x0.size(), n);
  for (int i = 0; i < n; ++i)
    e0.col(i) = scale * (p.particles[static_cast<std::size_t>(i)] - p.x0);
  DeviationBundle d;
  d.e.push_back(e0);
  for (int t = 0; t < p.horizon; ++t)
    d.e.push_back(lp.lin[static_cast<std::size_t>(t)].A * d.e.back());
  return d;
}

// cost_info(x_hat, e) = sum_j R_j(x_hat) sum_i (H_j(x_hat) e^i)^2.
inline double cost_info(const ObservationModel& obs, const Vec& x_hat,
                        const Mat& e) {
  const Vec r = obs.weighting_diag(x_hat);
  const Mat he = obs.jacobian(x_hat) * e;  // n_z x N
  double c = 0.0;
  for (int j = 0; j < obs.obs_dim(); ++j)
    c += r[j] * he.row(j).squaredNorm();
  return c;
}

inline double cost_eff(const Vec& u, const Mat& V) { return u.dot(V * u); }

// Objective evaluation context: fixes the linearization (about a reference
// rollout) and the obstacle barrier fields, so repeated cost/gradient calls
// inside the inner optimization loop are cheap.
class ObjectiveEval {
 public:
  ObjectiveEval(const PlanningProblem& p, const ControlSequence& u_ref)
      : p_(&p), lp_(linearize_about(p, u_ref)), dev_(deviation_bundle(p, lp_)) {
    if (p.mode != EnvMode::Convex) {
      fields_.reserve(static_cast<std::size_t>(p.horizon));
      for (int t = 0; t < p.horizon; ++t) {
        // Static schedules may be given as a single entry.
        const auto& obs_t =
            p.obstacle_schedule[std::min<std::size_t>(
                static_cast<std::size_t>(t), p.obstacle_schedule.size() - 1)];
        fields_.emplace_back(obs_t, p.obf);
      }
    }
  }

  const LinearizedPath& linearization() const { return lp_; }
  const DeviationBundle& deviations() const { return dev_; }

  std::vector<Vec> nominal(const ControlSequence& u) const {
    return nominal_trajectory(*p_, lp_, u);
  }

  CostBreakdown cost(const ControlSequence& u) const {
    return cost_impl(u, nullptr, nullptr);
  }

  CostBreakdown cost(const ControlSequence& u, bool& barrier_capped) const {
    return cost_impl(u, nullptr, &barrier_capped);
  }

  // Analytic gradient with respect to the stacked control vector.
  Vec gradient(const ControlSequence& u) const {
    Vec g;
    cost_impl(u, &g, nullptr);
    return g;
  }

 private:
  CostBreakdown cost_impl(const ControlSequence& u, Vec* grad_out,
                          bool* capped_out) const {
    const PlanningProblem& p = *p_;
    const int K = p.horizon;
    const int nx = p.process.state_dim();
    const int nu = p.process.control_dim();
    const std::vector<Vec> xs = nominal(u);
    if (capped_out) *capped_out = false;

    CostBreakdown cb;
    // Stage-cost gradients with respect to each nominal state.
    std::vector<Vec> gx(static_cast<std::size_t>(K) + 1, Vec::Zero(nx));

    for (int t = 1; t <= K; ++t) {
      const Vec& x = xs[static_cast<std::size_t>(t)];
      const Mat& e = dev_.e[static_cast<std::size_t>(t)];
      if (p.info_enabled) {
        cb.info += p.info_weight * cost_info(p.observation, x, e);
        if (grad_out) {
          Vec gi = Vec::Zero(nx);
          info_state_gradient(x, e, gi);
          gx[static_cast<std::size_t>(t)] += p.info_weight * gi;
        }
      }
      cb.effort += cost_eff(u[static_cast<std::size_t>(t - 1)], p.effort_weight);
    }

    if (p.mode != EnvMode::Convex) {
      for (int t = 1; t <= K; ++t) {
        const BarrierField& field = fields_[static_cast<std::size_t>(t - 1)];
        const Vec& xa = xs[static_cast<std::size_t>(t - 1)];
        const Vec& xb = xs[static_cast<std::size_t>(t)];
        const auto pa = p.process.body_points(xa);
        const auto pb = p.process.body_points(xb);
        for (std::size_t k = 0; k < pa.size(); ++k) {
          if (grad_out || capped_out) {
            Vec2 g1, g2;
            bool capped = false;
            cb.obstacle +=
                field.segment_cost_grad(pa[k], pb[k], g1, g2, &capped);
            if (capped && capped_out) *capped_out = true;
            if (grad_out) {
              gx[static_cast<std::size_t>(t - 1)] +=
                  p.process.body_point_jacobian(xa, static_cast<int>(k))
                      .transpose() *
                  g1;
              gx[static_cast<std::size_t>(t)] +=
                  p.process.body_point_jacobian(xb, static_cast<int>(k))
                      .transpose() *
                  g2;
            }
          } else {
            cb.obstacle += field.segment_cost(pa[k], pb[k]);
          }
        }
      }
    }

    const Vec term_err = xs.back() - p.goal;
    cb.terminal = p.goal_weight * term_err.squaredNorm();
    cb.total = cb.info + cb.effort + cb.obstacle + cb.terminal;

    if (grad_out) {
      gx[static_cast<std::size_t>(K)] += 2.0 * p.goal_weight * term_err;
      // Backward adjoint pass through x_{t+1} = A_t x_t + B_t u_t + fp_t.
      grad_out->resize(K * nu);
      Vec lambda = gx[static_cast<std::size_t>(K)];
      for (int t = K - 1; t >= 0; --t) {
        const Linearization& l = lp_.lin[static_cast<std::size_t>(t)];
        grad_out->segment(t * nu, nu) =
            2.0 * (p.effort_weight * u[static_cast<std::size_t>(t)]) +
            l.B.transpose() * lambda;
        lambda = gx[static_cast<std::size_t>(t)] + l.A.transpose() * lambda;
      }
    }
    return cb;
  }

  // d cost_info / d x_hat, accumulated into g.
  void info_state_gradient(const Vec& x, const Mat& e, Vec& g) const {
    const ObservationModel& obs = p_->observation;
    const Vec r = obs.weighting_diag(x);
    const Mat rg = obs.weighting_grad(x);
    const Mat H = obs.jacobian(x);
    const Mat he = H * e;  // n_z x N
    const auto hess = obs.reading_hessians(x);
    for (int j = 0; j < obs.obs_dim(); ++j) {
      const double sj = he.row(j).squaredNorm();
      g += sj * rg.row(j).transpose();
      // d/dx sum_i (H_j e^i)^2 = 2 sum_i (H_j e^i) (Hess_j e^i)
      const Mat ge = hess[static_cast<std::size_t>(j)] * e;  // n_x x N
      g += 2.0 * r[j] * (ge * he.row(j).transpose());
    }
  }

  const PlanningProblem* p_;
  LinearizedPath lp_;
  DeviationBundle dev_;
  std::vector<BarrierField> fields_;
};

// Convenience entry points linearizing about the rollout of u itself.
inline CostBreakdown total_objective(const PlanningProblem& p,
                                     const ControlSequence& u) {
  return ObjectiveEval(p, u).cost(u);
}

inline Vec objective_gradient(const PlanningProblem& p,
                              const ControlSequence& u) {
  return ObjectiveEval(p, u).gradient(u);
}

// Midpoint-convexity probe of the info+effort+terminal objective along the
// segment [u_a, u_b] (convex-environment mode).
inline bool check_info_convexity(const PlanningProblem& p,
                                 const ControlSequence& u_a,
                                 const ControlSequence& u_b,
                                 double tol = 1e-8) {
  PlanningProblem q = p;
  q.mode = EnvMode::Convex;
  ControlSequence mid(u_a.size());
  for (std::size_t t = 0; t < u_a.size(); ++t)
    mid[t] = 0.5 * (u_a[t] + u_b[t]);
  ObjectiveEval eval(q, mid);
  const double fa = eval.cost(u_a).total;
  const double fb = eval.cost(u_b).total;
  const double fm = eval.cost(mid).total;
  return fm <= 0.5 * (fa + fb) + tol;
}

}  // namespace slap

#endif  // SLAP_OBJECTIVE_HPP
