#ifndef SLAP_BELIEF_HPP
#define SLAP_BELIEF_HPP

#include "slap/models.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace slap {

// Weighted particle representation of the belief.
struct ParticleBelief {
  std::vector<Vec> particles;
  std::vector<double> weights;

  int size() const { return static_cast<int>(particles.size()); }

  static ParticleBelief uniform(std::vector<Vec> particles) {
    ParticleBelief b;
    b.weights.assign(particles.size(), 1.0 / static_cast<double>(particles.size()));
    b.particles = std::move(particles);
    b.validate();
    return b;
  }

  static ParticleBelief sampled(const Vec& mean, const Vec& sigma, int n,
                                RngStream& rng) {
    std::vector<Vec> ps;
    ps.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      ps.push_back(mean + sigma.cwiseProduct(rng.gaussian_vec(
                              static_cast<int>(mean.size()))));
    return uniform(std::move(ps));
  }

  void validate() const {
    if (particles.empty() || particles.size() != weights.size())
      throw DimensionError("belief: empty or mismatched particle set");
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw DimensionError("belief: negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw DimensionError("belief: weights do not sum to 1");
    for (const Vec& p : particles)
      if (!all_finite(p)) throw DimensionError("belief: non-finite particle");
  }

  Vec mean() const {
    Vec m = Vec::Zero(particles.front().size());
    for (int i = 0; i < size(); ++i)
      m += weights[static_cast<std::size_t>(i)] * particles[static_cast<std::size_t>(i)];
    return m;
  }

  // Trace of the weighted sample covariance; the spread diagnostic.
  double covariance_trace() const {
    const Vec m = mean();
    double tr = 0.0;
    for (int i = 0; i < size(); ++i)
      tr += weights[static_cast<std::size_t>(i)] *
            (particles[static_cast<std::size_t>(i)] - m).squaredNorm();
    return tr;
  }
};

struct StoppingRule {
  double goal_radius = 0.3;
  double weight_threshold = 0.9;
  int max_steps = 200;
};

// Propagates every particle through the process model with independently
// sampled noise. Weights are untouched.
inline ParticleBelief predict(const ParticleBelief& b, const ProcessModel& model,
                              const Vec& u, RngStream& rng) {
  ParticleBelief out = b;
  for (Vec& p : out.particles)
    p = model.step(p, u, rng.gaussian_vec(model.noise_dim()));
  return out;
}

// Bayesian reweighting by the Gaussian observation likelihood.
inline ParticleBelief update(const ParticleBelief& b,
                             const ObservationModel& model, const Vec& z) {
  ParticleBelief out = b;
  std::vector<double> ll(static_cast<std::size_t>(b.size()));
  double max_ll = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < b.size(); ++i) {
    ll[static_cast<std::size_t>(i)] =
        model.log_likelihood(z, b.particles[static_cast<std::size_t>(i)]);
    max_ll = std::max(max_ll, ll[static_cast<std::size_t>(i)]);
  }
  // All likelihoods underflowing to zero means the observation is
  // irreconcilable with the particle set.
  if (max_ll < std::log(std::numeric_limits<double>::min()))
    throw FilterDivergenceError("update: all particle likelihoods underflow");
  double sum = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    out.weights[static_cast<std::size_t>(i)] *=
        std::exp(ll[static_cast<std::size_t>(i)] - max_ll);
    sum += out.weights[static_cast<std::size_t>(i)];
  }
  if (sum <= 0.0)
    throw FilterDivergenceError("update: weight normalization underflow");
  for (double& w : out.weights) w /= sum;
  return out;
}

// Systematic (low-variance) resampling to uniform weights.
inline ParticleBelief resample(const ParticleBelief& b, RngStream& rng,
                               int n_out = 0) {
  const int n = n_out > 0 ? n_out : b.size();
  std::vector<Vec> picked;
  picked.reserve(static_cast<std::size_t>(n));
  const double u0 = rng.uniform() / static_cast<double>(n);
  double cum = b.weights[0];
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    const double target = u0 + static_cast<double>(i) / static_cast<double>(n);
    while (cum < target && idx + 1 < b.size()) {
      ++idx;
      cum += b.weights[static_cast<std::size_t>(idx)];
    }
    picked.push_back(b.particles[static_cast<std::size_t>(idx)]);
  }
  return ParticleBelief::uniform(std::move(picked));
}

// Argmax of a weighted Gaussian kernel-density estimate evaluated at the
// particle locations, with per-axis Silverman bandwidths. Ties break to the
// lowest index.
inline Vec map_estimate(const ParticleBelief& b) {
  const int n = b.size();
  const int d = static_cast<int>(b.particles.front().size());
  if (n == 1) return b.particles.front();
  const Vec m = b.mean();
  Vec var = Vec::Zero(d);
  for (int i = 0; i < n; ++i)
    var += b.weights[static_cast<std::size_t>(i)] *
           (b.particles[static_cast<std::size_t>(i)] - m)
               .cwiseAbs2();
  const double silverman =
      std::pow(4.0 / ((d + 2.0) * n), 1.0 / (d + 4.0));
  Vec bw = var.cwiseSqrt() * silverman;
  for (int k = 0; k < d; ++k) bw[k] = std::max(bw[k], 1e-12);

  int best = 0;
  double best_density = -1.0;
  for (int j = 0; j < n; ++j) {
    double density = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vec diff = (b.particles[static_cast<std::size_t>(j)] -
                        b.particles[static_cast<std::size_t>(i)])
                           .cwiseQuotient(bw);
      density += b.weights[static_cast<std::size_t>(i)] *
                 std::exp(-0.5 * diff.squaredNorm());
    }
    if (density > best_density) {
      best_density = density;
      best = j;
    }
  }
  return b.particles[static_cast<std::size_t>(best)];
}

// Probability mass within Euclidean distance r of the goal position
// (position coordinates only; heading excluded).
inline double goal_probability(const ParticleBelief& b, const Vec& goal,
                               double r) {
  if (r <= 0.0) throw DimensionError("goal_probability: radius must be > 0");
  const Vec2 g = goal.head<2>();
  double p = 0.0;
  for (int i = 0; i < b.size(); ++i)
    if ((b.particles[static_cast<std::size_t>(i)].head<2>() - g).norm() <= r)
      p += b.weights[static_cast<std::size_t>(i)];
  return p;
}

inline double effective_sample_size(const ParticleBelief& b) {
  double s = 0.0;
  for (double w : b.weights) s += w * w;
  return 1.0 / s;
}

}  // namespace slap

#endif  // SLAP_BELIEF_HPP
