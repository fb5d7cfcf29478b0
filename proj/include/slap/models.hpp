#ifndef SLAP_MODELS_HPP
#define SLAP_MODELS_HPP

#include "slap/common.hpp"

namespace slap {

// Affine linearization of the process model about a nominal (x, u):
//   x' ~= A x + B u + G w + fp,   fp = f(x_p, u_p, 0) - A x_p - B u_p.
struct Linearization {
  Mat A;
  Mat B;
  Mat G;
  Vec fp;
};

// Covering balls for the robot body, placed along the heading axis.
// A point robot is one ball at offset 0.
struct BodyCover {
  double radius = 0.0;
  std::vector<double> offsets{0.0};
};

// Discrete-time holonomic process model
//   x_{t+1} = x_t + B u_t dt + diag(sigma) w_t sqrt(dt),
// with w_t standard normal. Covers both the planar single integrator
// (n_x = 2) and the youBot mecanum base (n_x = 3, last entry heading).
class ProcessModel {
 public:
  static ProcessModel single_integrator(double dt, const Vec& sigma,
                                        double max_u, BodyCover body = {}) {
    ProcessModel m;
    m.dt_ = dt;
    m.sigma_ = sigma;
    m.max_u_ = max_u;
    m.body_ = std::move(body);
    m.has_heading_ = false;
    m.input_ = Mat::Identity(2, 2);
    m.validate();
    return m;
  }

  // Mecanum forward kinematics; wheel_radius/half_length/half_width scale the
  // constant input matrix. Controls are the four wheel angular velocities.
  static ProcessModel youbot(double dt, const Vec& sigma, double max_u,
                             double wheel_radius, double half_length,
                             double half_width, BodyCover body = {}) {
    ProcessModel m;
    m.dt_ = dt;
    m.sigma_ = sigma;
    m.max_u_ = max_u;
    m.body_ = std::move(body);
    m.has_heading_ = true;
    const double r4 = wheel_radius / 4.0;
    const double rw = wheel_radius / (4.0 * (half_length + half_width));
    Mat B(3, 4);
    B << r4, r4, r4, r4,
        -r4, r4, r4, -r4,
        -rw, rw, -rw, rw;
    m.input_ = B;
    m.validate();
    return m;
  }

  int state_dim() const { return static_cast<int>(input_.rows()); }
  int control_dim() const { return static_cast<int>(input_.cols()); }
  int noise_dim() const { return state_dim(); }
  double dt() const { return dt_; }
  double max_u() const { return max_u_; }
  bool has_heading() const { return has_heading_; }
  const Mat& input_matrix() const { return input_; }
  const Vec& noise_sigma() const { return sigma_; }
  const BodyCover& body() const { return body_; }

  Vec step(const Vec& x, const Vec& u, const Vec& w) const {
    check_dims(x, u, w);
    if (!all_finite(x) || !all_finite(u) || !all_finite(w))
      throw DimensionError("step: non-finite input");
    Vec out = x + input_ * u * dt_ +
              sigma_.cwiseProduct(w) * std::sqrt(dt_);
    if (has_heading_) out[2] = wrap_angle(out[2]);
    return out;
  }

  Linearization linearize(const Vec& x, const Vec& u) const {
    Vec w0 = Vec::Zero(noise_dim());
    check_dims(x, u, w0);
    Linearization lin;
    lin.A = Mat::Identity(state_dim(), state_dim());
    lin.B = input_ * dt_;
    lin.G = sigma_.asDiagonal() * Mat::Identity(state_dim(), state_dim()) *
            std::sqrt(dt_);
    lin.fp = step(x, u, w0) - lin.A * x - lin.B * u;
    return lin;
  }

  Vec2 position(const Vec& x) const { return x.head<2>(); }

  // Centers of the covering balls in the workspace.
  std::vector<Vec2> body_points(const Vec& x) const {
    const double th = has_heading_ ? x[2] : 0.0;
    const Vec2 dir(std::cos(th), std::sin(th));
    std::vector<Vec2> pts;
    pts.reserve(body_.offsets.size());
    for (double off : body_.offsets) pts.push_back(position(x) + off * dir);
    return pts;
  }

  // d body_point_k / d x, 2 x n_x.
  Mat body_point_jacobian(const Vec& x, int k) const {
    Mat J = Mat::Zero(2, state_dim());
    J(0, 0) = 1.0;
    J(1, 1) = 1.0;
    if (has_heading_) {
      const double th = x[2];
      const double off = body_.offsets[static_cast<std::size_t>(k)];
      J(0, 2) = -off * std::sin(th);
      J(1, 2) = off * std::cos(th);
    }
    return J;
  }

 private:
  void validate() const {
    if (dt_ <= 0.0) throw DimensionError("process model: dt must be positive");
    if (sigma_.size() != state_dim())
      throw DimensionError("process model: noise sigma size mismatch");
    if ((sigma_.array() < 0.0).any())
      throw DimensionError("process model: negative noise std dev");
  }

  void check_dims(const Vec& x, const Vec& u, const Vec& w) const {
    if (x.size() != state_dim() || u.size() != control_dim() ||
        w.size() != noise_dim())
      throw DimensionError("step: dimension mismatch");
  }

  double dt_ = 0.1;
  double max_u_ = 1.0;
  Vec sigma_;
  Mat input_;
  bool has_heading_ = false;
  BodyCover body_;
};

// Range/bearing (or direct-position) readings to a set of point landmarks,
// with the squared-distance observation weighting R(x).
class ObservationModel {
 public:
  enum class Kind { RangeBearing, RangeOnly, Position };
  enum class Weighting { SquaredDistance, Unit };

  ObservationModel(Kind kind, std::vector<Vec2> landmarks, Vec reading_sigma,
                   Weighting weighting = Weighting::SquaredDistance)
      : kind_(kind),
        landmarks_(std::move(landmarks)),
        weighting_(weighting) {
    if (landmarks_.empty())
      throw DimensionError("observation model: needs at least one landmark");
    if (reading_sigma.size() == readings_per_landmark()) {
      sigma_.resize(obs_dim());
      for (int l = 0; l < num_landmarks(); ++l)
        sigma_.segment(l * readings_per_landmark(), readings_per_landmark()) =
            reading_sigma;
    } else if (reading_sigma.size() == obs_dim()) {
      sigma_ = std::move(reading_sigma);
    } else {
      throw DimensionError("observation model: noise sigma size mismatch");
    }
    if ((sigma_.array() <= 0.0).any())
      throw DimensionError("observation model: noise std devs must be > 0");
  }

  Kind kind() const { return kind_; }
  int num_landmarks() const { return static_cast<int>(landmarks_.size()); }
  int readings_per_landmark() const {
    return kind_ == Kind::RangeOnly ? 1 : 2;
  }
  int obs_dim() const { return num_landmarks() * readings_per_landmark(); }
  const std::vector<Vec2>& landmarks() const { return landmarks_; }
  const Vec& noise_sigma() const { return sigma_; }
  int landmark_of_reading(int j) const { return j / readings_per_landmark(); }
  bool reading_is_bearing(int j) const {
    return kind_ == Kind::RangeBearing && (j % 2) == 1;
  }

  Vec observe(const Vec& x, const Vec& nu) const {
    if (nu.size() != obs_dim())
      throw DimensionError("observe: noise dimension mismatch");
    Vec z = predict(x) + nu;
    if (kind_ == Kind::RangeBearing)
      for (int j = 1; j < obs_dim(); j += 2) z[j] = wrap_angle(z[j]);
    return z;
  }

  // Noiseless h(x). Throws on landmark coincidence for range/bearing kinds.
  Vec predict(const Vec& x) const {
    const Vec2 pos = x.head<2>();
    const double heading = x.size() > 2 ? x[2] : 0.0;
    Vec z(obs_dim());
    for (int l = 0; l < num_landmarks(); ++l) {
      const Vec2 d = pos - landmarks_[static_cast<std::size_t>(l)];
      const double dist = d.norm();
      switch (kind_) {
        case Kind::Position:
          z.segment<2>(2 * l) = d;
          break;
        case Kind::RangeOnly:
          // range itself is fine at distance 0; only derivatives degenerate
          z[l] = dist;
          break;
        case Kind::RangeBearing:
          require_separated(dist);
          z[2 * l] = dist;
          z[2 * l + 1] = wrap_angle(std::atan2(-d.y(), -d.x()) - heading);
          break;
      }
    }
    return z;
  }

  // H(x), obs_dim x n_x.
  Mat jacobian(const Vec& x) const {
    const int nx = static_cast<int>(x.size());
    const Vec2 pos = x.head<2>();
    Mat H = Mat::Zero(obs_dim(), nx);
    for (int l = 0; l < num_landmarks(); ++l) {
      const Vec2 d = pos - landmarks_[static_cast<std::size_t>(l)];
      const double d2 = d.squaredNorm();
      const double dist = std::sqrt(d2);
      switch (kind_) {
        case Kind::Position:
          H(2 * l, 0) = 1.0;
          H(2 * l + 1, 1) = 1.0;
          break;
        case Kind::RangeOnly:
          require_separated(dist);
          H.block<1, 2>(l, 0) = d.transpose() / dist;
          break;
        case Kind::RangeBearing: {
          require_separated(dist);
          H.block<1, 2>(2 * l, 0) = d.transpose() / dist;
          // bearing = atan2(Ly - y, Lx - x) - heading
          const double a = -d.y(), b = -d.x();
          H(2 * l + 1, 0) = a / d2;
          H(2 * l + 1, 1) = -b / d2;
          if (nx > 2) H(2 * l + 1, 2) = -1.0;
          break;
        }
      }
    }
    return H;
  }

  // Second derivatives of each reading, used by the analytic objective
  // gradient (d/dx of H_j(x)).
  std::vector<Mat> reading_hessians(const Vec& x) const {
    const int nx = static_cast<int>(x.size());
    const Vec2 pos = x.head<2>();
    std::vector<Mat> out(static_cast<std::size_t>(obs_dim()),
                         Mat::Zero(nx, nx));
    for (int l = 0; l < num_landmarks(); ++l) {
      if (kind_ == Kind::Position) continue;
      const Vec2 d = pos - landmarks_[static_cast<std::size_t>(l)];
      const double d2 = d.squaredNorm();
      const double dist = std::sqrt(d2);
      require_separated(dist);
      const Vec2 r = d / dist;
      Mat2 range_hess = (Mat2::Identity() - r * r.transpose()) / dist;
      const int base = l * readings_per_landmark();
      out[static_cast<std::size_t>(base)].block<2, 2>(0, 0) = range_hess;
      if (kind_ == Kind::RangeBearing) {
        const double a = -d.y(), b = -d.x();
        const double d4 = d2 * d2;
        Mat2 bh;
        bh << 2.0 * a * b / d4, (a * a - b * b) / d4,
            (a * a - b * b) / d4, -2.0 * a * b / d4;
        out[static_cast<std::size_t>(base + 1)].block<2, 2>(0, 0) = bh;
      }
    }
    return out;
  }

  // Diagonal of the weighting matrix R(x): squared distance to the reading's
  // landmark (or 1 under unit weighting).
  Vec weighting_diag(const Vec& x) const {
    Vec r(obs_dim());
    const Vec2 pos = x.head<2>();
    for (int j = 0; j < obs_dim(); ++j) {
      if (weighting_ == Weighting::Unit) {
        r[j] = 1.0;
      } else {
        const Vec2 d =
            pos - landmarks_[static_cast<std::size_t>(landmark_of_reading(j))];
        r[j] = d.squaredNorm();
      }
    }
    return r;
  }

  // d R_j / d x stacked as obs_dim x n_x.
  Mat weighting_grad(const Vec& x) const {
    const int nx = static_cast<int>(x.size());
    Mat g = Mat::Zero(obs_dim(), nx);
    if (weighting_ == Weighting::Unit) return g;
    const Vec2 pos = x.head<2>();
    for (int j = 0; j < obs_dim(); ++j) {
      const Vec2 d =
          pos - landmarks_[static_cast<std::size_t>(landmark_of_reading(j))];
      g.block<1, 2>(j, 0) = 2.0 * d.transpose();
    }
    return g;
  }

  // Gaussian log-likelihood of z given state x; bearing residuals wrapped.
  double log_likelihood(const Vec& z, const Vec& x) const {
    Vec res = z - predict(x);
    if (kind_ == Kind::RangeBearing)
      for (int j = 1; j < obs_dim(); j += 2) res[j] = wrap_angle(res[j]);
    double ll = 0.0;
    for (int j = 0; j < obs_dim(); ++j) {
      const double s = sigma_[j];
      ll += -0.5 * (res[j] / s) * (res[j] / s) -
            std::log(s * std::sqrt(2.0 * M_PI));
    }
    return ll;
  }

 private:
  static void require_separated(double dist) {
    if (dist < 1e-9)
      throw DegenerateObservationError(
          "observation degenerate: state coincides with a landmark");
  }

  Kind kind_;
  std::vector<Vec2> landmarks_;
  Vec sigma_;
  Weighting weighting_;
};

}  // namespace slap

#endif  // SLAP_MODELS_HPP
