#ifndef SLAP_HOMOTOPY_HPP
#define SLAP_HOMOTOPY_HPP

#include "slap/geometry.hpp"
#include "slap/models.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>

namespace slap {

// Signed crossing word over the per-obstacle upward rays; reduced
// (adjacent inverse pairs canceled).
using PathSignature = std::vector<std::pair<int, int>>;  // (obstacle, +-1)

inline std::string signature_string(const PathSignature& sig) {
  if (sig.empty()) return "-";
  std::string s;
  for (const auto& [i, dir] : sig) {
    if (!s.empty()) s += ' ';
    s += "o" + std::to_string(i + 1) + (dir > 0 ? "" : "'");
  }
  return s;
}

// Casts a fixed vertical ray upward from each obstacle center and records
// signed crossings of the path in traversal order, then reduces the word.
inline PathSignature signature(const std::vector<Vec2>& path,
                               const std::vector<Ellipsoid>& obstacles) {
  struct Crossing {
    double order;
    int obstacle;
    int dir;
  };
  std::vector<Crossing> events;
  for (std::size_t s = 0; s + 1 < path.size(); ++s) {
    const Vec2& a = path[s];
    const Vec2& b = path[s + 1];
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const Vec2& c = obstacles[i].c;
      const double fa = a.x() - c.x();
      const double fb = b.x() - c.x();
      // strict sign change; points exactly on the ray count as right of it
      const bool left_a = fa <= 0.0, left_b = fb <= 0.0;
      if (left_a == left_b) continue;
      const double t = fa / (fa - fb);
      const double y = a.y() + t * (b.y() - a.y());
      if (y <= c.y()) continue;
      events.push_back({static_cast<double>(s) + t, static_cast<int>(i),
                        left_a ? +1 : -1});
    }
  }
  std::sort(events.begin(), events.end(),
            [](const Crossing& l, const Crossing& r) { return l.order < r.order; });
  PathSignature word;
  for (const Crossing& ev : events) {
    if (!word.empty() && word.back().first == ev.obstacle &&
        word.back().second == -ev.dir) {
      word.pop_back();
    } else {
      word.emplace_back(ev.obstacle, ev.dir);
    }
  }
  return word;
}

// Nodes are the start, the goal, and each ellipsoid's four axis endpoints
// pushed outward by delta. Edges ignore collisions with the ellipsoids that
// own either endpoint.
struct VisibilityGraph {
  std::vector<Vec2> nodes;
  std::vector<int> owner;  // owning ellipsoid index, -1 for start/goal
  std::vector<std::vector<std::pair<int, double>>> adj;
  int start = 0;
  int goal = 1;
};

inline VisibilityGraph build_visibility_graph(
    const Vec2& start, const Vec2& goal,
    const std::vector<Ellipsoid>& obstacles, double delta = 0.05) {
  for (const Ellipsoid& e : obstacles)
    if (contains(e, start) || contains(e, goal))
      throw DegenerateGeometryError(
          "visibility graph: start or goal inside an obstacle");

  VisibilityGraph g;
  g.nodes = {start, goal};
  g.owner = {-1, -1};
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const Ellipsoid& e = obstacles[i];
    for (const Vec2& ep : {e.zeta1, e.zeta2, e.xi1, e.xi2}) {
      const Vec2 dir = (ep - e.c).normalized();
      g.nodes.push_back(ep + delta * dir);
      g.owner.push_back(static_cast<int>(i));
    }
  }
  const int n = static_cast<int>(g.nodes.size());
  g.adj.assign(static_cast<std::size_t>(n), {});
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      bool free = true;
      for (std::size_t i = 0; i < obstacles.size() && free; ++i) {
        const int oi = static_cast<int>(i);
        if (g.owner[static_cast<std::size_t>(a)] == oi ||
            g.owner[static_cast<std::size_t>(b)] == oi)
          continue;
        if (segment_intersects(obstacles[i], g.nodes[static_cast<std::size_t>(a)],
                               g.nodes[static_cast<std::size_t>(b)]))
          free = false;
      }
      if (free) {
        const double len = (g.nodes[static_cast<std::size_t>(a)] -
                            g.nodes[static_cast<std::size_t>(b)])
                               .norm();
        g.adj[static_cast<std::size_t>(a)].emplace_back(b, len);
        g.adj[static_cast<std::size_t>(b)].emplace_back(a, len);
      }
    }
  return g;
}

namespace detail {

struct NodePath {
  std::vector<int> nodes;
  double length = 0.0;
};

// Dijkstra with optional removed nodes/edges (for Yen's spur paths).
inline std::optional<NodePath> shortest_path(
    const VisibilityGraph& g, int src, int dst,
    const std::set<int>& removed_nodes,
    const std::set<std::pair<int, int>>& removed_edges) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<double> dist(static_cast<std::size_t>(n),
                           std::numeric_limits<double>::infinity());
  std::vector<int> prev(static_cast<std::size_t>(n), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(src)] = 0.0;
  pq.emplace(0.0, src);
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(v)]) continue;
    if (v == dst) break;
    for (auto [w, len] : g.adj[static_cast<std::size_t>(v)]) {
      if (removed_nodes.count(w)) continue;
      if (removed_edges.count({v, w})) continue;
      if (d + len < dist[static_cast<std::size_t>(w)]) {
        dist[static_cast<std::size_t>(w)] = d + len;
        prev[static_cast<std::size_t>(w)] = v;
        pq.emplace(d + len, w);
      }
    }
  }
  if (!std::isfinite(dist[static_cast<std::size_t>(dst)])) return std::nullopt;
  NodePath p;
  p.length = dist[static_cast<std::size_t>(dst)];
  for (int v = dst; v != -1; v = prev[static_cast<std::size_t>(v)])
    p.nodes.push_back(v);
  std::reverse(p.nodes.begin(), p.nodes.end());
  return p;
}

// Yen's k-shortest loop-free paths.
inline std::vector<NodePath> k_shortest_paths(const VisibilityGraph& g,
                                              int k) {
  std::vector<NodePath> result;
  auto first = shortest_path(g, g.start, g.goal, {}, {});
  if (!first) return result;
  result.push_back(*first);
  auto cmp = [](const NodePath& a, const NodePath& b) {
    return a.length > b.length;
  };
  std::priority_queue<NodePath, std::vector<NodePath>, decltype(cmp)>
      candidates(cmp);
  std::set<std::vector<int>> seen{first->nodes};

  while (static_cast<int>(result.size()) < k) {
    const NodePath& last = result.back();
    for (std::size_t spur = 0; spur + 1 < last.nodes.size(); ++spur) {
      std::vector<int> root(last.nodes.begin(),
                            last.nodes.begin() + static_cast<long>(spur) + 1);
      std::set<std::pair<int, int>> removed_edges;
      for (const NodePath& p : result) {
        if (p.nodes.size() > spur + 1 &&
            std::equal(root.begin(), root.end(), p.nodes.begin())) {
          removed_edges.insert({p.nodes[spur], p.nodes[spur + 1]});
          removed_edges.insert({p.nodes[spur + 1], p.nodes[spur]});
        }
      }
      std::set<int> removed_nodes(root.begin(), root.end() - 1);
      auto tail = shortest_path(g, root.back(), g.goal, removed_nodes,
                                removed_edges);
      if (!tail) continue;
      NodePath total;
      total.nodes = root;
      total.nodes.insert(total.nodes.end(), tail->nodes.begin() + 1,
                         tail->nodes.end());
      total.length = tail->length;
      for (std::size_t i = 0; i < spur; ++i) {
        for (auto [w, len] : g.adj[static_cast<std::size_t>(root[i])])
          if (w == root[i + 1]) {
            total.length += len;
            break;
          }
      }
      if (seen.insert(total.nodes).second) candidates.push(total);
    }
    if (candidates.empty()) break;
    result.push_back(candidates.top());
    candidates.pop();
  }
  return result;
}

}  // namespace detail

// k shortest loop-free paths deduplicated by homotopy signature: at most one
// path per distinct signature, sorted by length.
inline std::vector<std::vector<Vec2>> enumerate_paths(
    const VisibilityGraph& g, const std::vector<Ellipsoid>& obstacles,
    int k) {
  // enumerate deeper than k: consecutive shortest paths often share a class
  const auto paths = detail::k_shortest_paths(g, std::max(k * 8, 16));
  if (paths.empty())
    throw DegenerateGeometryError("enumerate_paths: no start-goal path");
  std::vector<std::vector<Vec2>> out;
  std::set<PathSignature> sigs;
  for (const auto& p : paths) {
    std::vector<Vec2> poly;
    poly.reserve(p.nodes.size());
    for (int v : p.nodes) poly.push_back(g.nodes[static_cast<std::size_t>(v)]);
    if (sigs.insert(signature(poly, obstacles)).second)
      out.push_back(std::move(poly));
    if (static_cast<int>(out.size()) == k) break;
  }
  return out;  // k_shortest_paths already yields them by increasing length
}

// Warm-start trajectory obtained by discretizing a polyline.
struct InitialTrajectory {
  std::vector<Vec> states;    // K+1 waypoints
  ControlSequence controls;   // K warm-start controls
  PathSignature sig;
};

// Resamples the polyline to K+1 equal-arc-length waypoints and inverts the
// noiseless linear step for the warm-start controls. K = 0 selects the
// horizon automatically from the path length and the saturated step reach.
inline InitialTrajectory discretize(const std::vector<Vec2>& path,
                                    const ProcessModel& model,
                                    const std::vector<Ellipsoid>& obstacles,
                                    int K = 0, double slack = 1.3,
                                    double heading = 0.0) {
  if (path.size() < 2)
    throw DegenerateGeometryError("discretize: path needs >= 2 points");
  std::vector<double> cum{0.0};
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    cum.push_back(cum.back() + (path[i + 1] - path[i]).norm());
  const double total = cum.back();

  const Mat& B = model.input_matrix();
  // conservative per-step position reach under saturation
  Eigen::JacobiSVD<Mat> svd(B.topRows(2), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double speed =
      svd.singularValues()[svd.singularValues().size() - 1] * model.max_u();
  if (K <= 0) {
    K = std::max(1, static_cast<int>(std::ceil(
                       total / (speed * model.dt()) * slack)));
  }

  auto at_arclen = [&](double s) -> Vec2 {
    s = std::clamp(s, 0.0, total);
    std::size_t i = 1;
    while (i + 1 < cum.size() && cum[i] < s) ++i;
    const double seg = cum[i] - cum[i - 1];
    const double t = seg > 0.0 ? (s - cum[i - 1]) / seg : 0.0;
    return path[i - 1] + t * (path[i] - path[i - 1]);
  };

  InitialTrajectory traj;
  const int nx = model.state_dim();
  for (int t = 0; t <= K; ++t) {
    Vec x = Vec::Zero(nx);
    x.head<2>() = at_arclen(total * t / K);
    if (model.has_heading()) x[2] = heading;
    traj.states.push_back(x);
  }
  const Mat Bdt = B * model.dt();
  const Mat pinv =
      Bdt.completeOrthogonalDecomposition().pseudoInverse();
  for (int t = 0; t < K; ++t) {
    Vec u = pinv * (traj.states[static_cast<std::size_t>(t) + 1] -
                    traj.states[static_cast<std::size_t>(t)]);
    const double norm = u.norm();
    if (norm > model.max_u()) {
      if (norm > model.max_u() * 1.5)
        throw DegenerateGeometryError(
            "discretize: required step exceeds saturation");
      u *= model.max_u() / norm;
    }
    traj.controls.push_back(u);
  }
  traj.sig = signature(path, obstacles);
  return traj;
}

}  // namespace slap

#endif  // SLAP_HOMOTOPY_HPP
