#ifndef SLAP_SVG_HPP
#define SLAP_SVG_HPP

#include "slap/simulate.hpp"

#include <cstdio>

namespace slap {

// Parametric boundary samples; every returned point satisfies
// (x - c)^T P (x - c) = 1.
inline std::vector<Vec2> ellipse_boundary_points(const Ellipsoid& e, int n) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(e.P);
  const Vec2 v0 = es.eigenvectors().col(0);
  const Vec2 v1 = es.eigenvectors().col(1);
  const double a = 1.0 / std::sqrt(es.eigenvalues()[0]);
  const double b = 1.0 / std::sqrt(es.eigenvalues()[1]);
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * M_PI * k / n;
    pts.push_back(e.c + a * std::cos(t) * v0 + b * std::sin(t) * v1);
  }
  return pts;
}

namespace detail {

class SvgWriter {
 public:
  SvgWriter(Vec2 world_min, Vec2 world_max, double px = 720.0)
      : min_(world_min), max_(world_max) {
    const Vec2 span = max_ - min_;
    scale_ = px / std::max(span.x(), span.y());
    width_ = span.x() * scale_ + 2 * margin_;
    height_ = span.y() * scale_ + 2 * margin_;
    buf_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    buf_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width_) +
            "\" height=\"" + fmt(height_) + "\" viewBox=\"0 0 " + fmt(width_) +
            " " + fmt(height_) + "\">\n";
    buf_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  Vec2 to_px(const Vec2& w) const {
    return Vec2(margin_ + (w.x() - min_.x()) * scale_,
                height_ - margin_ - (w.y() - min_.y()) * scale_);
  }

  void polyline(const std::vector<Vec2>& pts, const std::string& stroke,
                double width, bool dashed = false, bool closed = false) {
    if (pts.size() < 2) return;
    buf_ += closed ? "<polygon points=\"" : "<polyline points=\"";
    for (const Vec2& p : pts) {
      const Vec2 q = to_px(p);
      buf_ += fmt(q.x()) + "," + fmt(q.y()) + " ";
    }
    buf_ += "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
            fmt(width) + "\"";
    if (dashed) buf_ += " stroke-dasharray=\"6,4\"";
    buf_ += "/>\n";
  }

  void circle(const Vec2& c, double world_r, const std::string& fill,
              const std::string& stroke = "none") {
    const Vec2 q = to_px(c);
    buf_ += "<circle cx=\"" + fmt(q.x()) + "\" cy=\"" + fmt(q.y()) +
            "\" r=\"" + fmt(world_r * scale_) + "\" fill=\"" + fill +
            "\" stroke=\"" + stroke + "\"/>\n";
  }

  void dot(const Vec2& c, double px_r, const std::string& fill) {
    const Vec2 q = to_px(c);
    buf_ += "<circle cx=\"" + fmt(q.x()) + "\" cy=\"" + fmt(q.y()) +
            "\" r=\"" + fmt(px_r) + "\" fill=\"" + fill + "\"/>\n";
  }

  void text(const Vec2& world_pos, const std::string& s, int size = 12,
            const std::string& fill = "black") {
    const Vec2 q = to_px(world_pos);
    text_px(q, s, size, fill);
  }

  void text_px(const Vec2& q, const std::string& s, int size = 12,
               const std::string& fill = "black") {
    buf_ += "<text x=\"" + fmt(q.x()) + "\" y=\"" + fmt(q.y()) +
            "\" font-size=\"" + std::to_string(size) +
            "\" font-family=\"sans-serif\" fill=\"" + fill + "\">" + s +
            "</text>\n";
  }

  void line_px(const Vec2& a, const Vec2& b, const std::string& stroke,
               double width, bool dashed = false) {
    buf_ += "<line x1=\"" + fmt(a.x()) + "\" y1=\"" + fmt(a.y()) + "\" x2=\"" +
            fmt(b.x()) + "\" y2=\"" + fmt(b.y()) + "\" stroke=\"" + stroke +
            "\" stroke-width=\"" + fmt(width) + "\"";
    if (dashed) buf_ += " stroke-dasharray=\"6,4\"";
    buf_ += "/>\n";
  }

  // axes with meter ticks along the workspace edges
  void axes() {
    const Vec2 bl = to_px(min_);
    const Vec2 br = to_px(Vec2(max_.x(), min_.y()));
    const Vec2 tl = to_px(Vec2(min_.x(), max_.y()));
    line_px(bl, br, "black", 1.0);
    line_px(bl, tl, "black", 1.0);
    for (double x = std::ceil(min_.x()); x <= max_.x(); x += 1.0) {
      const Vec2 q = to_px(Vec2(x, min_.y()));
      line_px(q, q + Vec2(0, 5), "black", 1.0);
      text_px(q + Vec2(-6, 18), fmt_tick(x), 10);
    }
    for (double y = std::ceil(min_.y()); y <= max_.y(); y += 1.0) {
      const Vec2 q = to_px(Vec2(min_.x(), y));
      line_px(q, q - Vec2(5, 0), "black", 1.0);
      text_px(q + Vec2(-26, 4), fmt_tick(y), 10);
    }
    text_px(Vec2(width_ / 2, height_ - 6), "x [m]", 11);
    text_px(Vec2(6, height_ / 2), "y [m]", 11);
  }

  std::string finish() {
    buf_ += "</svg>\n";
    return buf_;
  }

  double height() const { return height_; }

 private:
  static std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.3f", v);
    return b;
  }
  static std::string fmt_tick(double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%g", v);
    return b;
  }

  Vec2 min_, max_;
  double scale_ = 1.0;
  double margin_ = 40.0;
  double width_ = 0.0, height_ = 0.0;
  std::string buf_;
};

}  // namespace detail

// Deterministic static scene plot: obstacles with their enclosing
// ellipsoids, landmarks, initial (dashed) and executed (solid) trajectories,
// and particle-cloud snapshots. Axes are in meters.
inline std::string render_plot(const RunLog& log, const Scenario& s) {
  detail::SvgWriter svg(s.workspace_min, s.workspace_max);
  svg.axes();

  for (const ScenarioObstacle& ob : s.obstacles) {
    if (!ob.source_polygon.vertices.empty())
      svg.polyline(ob.source_polygon.vertices, "dimgray", 1.0, false, true);
    svg.polyline(ellipse_boundary_points(ob.base, 96), "firebrick", 1.5, false,
                 true);
  }
  if (!log.steps.empty()) {
    for (const Ellipsoid& e : log.steps.back().obstacle_poses)
      svg.polyline(ellipse_boundary_points(e, 96), "salmon", 1.0, true, true);
  }

  for (const Vec2& lm : s.observation.landmarks()) {
    svg.dot(lm, 5.0, "goldenrod");
    svg.text(lm + Vec2(0.05, 0.05), "landmark", 10, "goldenrod");
  }
  svg.circle(s.goal.head<2>(), s.stop.goal_radius, "none", "seagreen");
  svg.dot(s.goal.head<2>(), 4.0, "seagreen");

  if (!log.seed_polyline.empty())
    svg.polyline(log.seed_polyline, "steelblue", 1.2, true);

  for (const Vec& p : log.initial_particles) svg.dot(p.head<2>(), 1.2, "#9ecae1");
  std::vector<Vec2> true_path, map_path;
  for (const StepRecord& r : log.steps) {
    true_path.push_back(r.true_state.head<2>());
    map_path.push_back(r.map_state.head<2>());
    for (const Vec& p : r.particle_snapshot) svg.dot(p.head<2>(), 1.0, "#c6dbef");
  }
  svg.polyline(map_path, "darkorange", 1.2, true);
  svg.polyline(true_path, "navy", 2.0);

  // legend
  svg.text_px(Vec2(48, 20), "navy: executed | orange: MAP | blue dashed: seed | red: obstacle MVEE | green: goal (" +
                                log.status + ")",
              11);
  return svg.finish();
}

inline void render_plot_file(const RunLog& log, const Scenario& s,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ScenarioError("render_plot: cannot write " + path);
  out << render_plot(log, s);
}

}  // namespace slap

#endif  // SLAP_SVG_HPP
