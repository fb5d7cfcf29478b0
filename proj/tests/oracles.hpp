// Independent reference implementations used only by the tests: central
// finite differences, a Kalman filter, an exact quadratic-program solve for
// the obstacle-free planning objective, and adaptive Simpson quadrature.
#ifndef SLAP_TEST_ORACLES_HPP
#define SLAP_TEST_ORACLES_HPP

#include "slap/objective.hpp"

#include <functional>

namespace oracles {

using slap::ControlSequence;
using slap::Mat;
using slap::Vec;
using slap::Vec2;

// Central finite-difference gradient of a scalar function of a vector.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f,
                       const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Central finite-difference Jacobian of a vector function.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                       double h = 1e-6) {
  const Vec f0 = f(x);
  Mat J(f0.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

struct KalmanState {
  Vec mean;
  Mat cov;
};

inline KalmanState kalman_predict(const KalmanState& s, const Mat& A,
                                  const Mat& B, const Vec& u, const Mat& Q) {
  return {A * s.mean + B * u, A * s.cov * A.transpose() + Q};
}

inline KalmanState kalman_update(const KalmanState& s, const Mat& H,
                                 const Mat& R, const Vec& z, const Vec& bias) {
  const Mat S = H * s.cov * H.transpose() + R;
  const Mat K = s.cov * H.transpose() * S.inverse();
  const Vec innov = z - (H * s.mean + bias);
  const int n = static_cast<int>(s.mean.size());
  return {s.mean + K * innov, (Mat::Identity(n, n) - K * H) * s.cov};
}

// Exact minimizer of  sum_t u_t' V u_t + lambda ||x0 + dt sum_t u_t - g||^2
// for single-integrator dynamics (A = I, B = dt I), as one linear solve.
struct LqSolution {
  ControlSequence controls;
  Vec terminal_state;
  double cost = 0.0;
};

inline LqSolution lq_penalized(const Vec& x0, const Vec& goal, int K,
                               double dt, const Mat& V, double lambda) {
  const int n = static_cast<int>(x0.size());
  Mat D(n, K * n);
  for (int t = 0; t < K; ++t)
    D.block(0, t * n, n, n) = dt * Mat::Identity(n, n);
  Mat IV = Mat::Zero(K * n, K * n);
  for (int t = 0; t < K; ++t) IV.block(t * n, t * n, n, n) = V;
  const Mat Hq = IV + lambda * D.transpose() * D;
  const Vec rhs = -lambda * D.transpose() * (x0 - goal);
  const Vec U = Hq.ldlt().solve(rhs);

  LqSolution sol;
  for (int t = 0; t < K; ++t) sol.controls.push_back(U.segment(t * n, n));
  sol.terminal_state = x0 + D * U;
  double eff = 0.0;
  for (const Vec& u : sol.controls) eff += u.dot(V * u);
  sol.cost = eff + lambda * (sol.terminal_state - goal).squaredNorm();
  return sol;
}

// Adaptive Simpson quadrature on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f,
                               double a, double b, double tol = 1e-9,
                               int depth = 30) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  std::function<double(double, double, double, double, double, double, int)>
      rec = [&](double lo, double hi, double flo, double fhi, double fmid,
                double whole, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) < 15.0 * tol)
      return left + right + (left + right - whole) / 15.0;
    return rec(lo, mid, flo, fmid, flm, left, d - 1) +
           rec(mid, hi, fmid, fhi, frm, right, d - 1);
  };
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return rec(a, b, fa, fb, fm, whole, depth);
}

// Dense block-diagonal quadratic form e' W e with W = blockdiag(H'RH),
// the direct (slow) evaluation of the information cost.
inline double dense_info_cost(const slap::ObservationModel& obs,
                              const Vec& x_hat, const Mat& e) {
  const Mat H = obs.jacobian(x_hat);
  const Vec r = obs.weighting_diag(x_hat);
  const Mat W = H.transpose() * r.asDiagonal() * H;
  double c = 0.0;
  for (int i = 0; i < e.cols(); ++i) c += e.col(i).dot(W * e.col(i));
  return c;
}

}  // namespace oracles

#endif  // SLAP_TEST_ORACLES_HPP
