#pragma once

// RRT* over control space, one tree per consecutive waypoint pair, plus
// random shortcutting of the resulting piecewise-straight path.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "amp/collision.hpp"
#include "amp/control_space.hpp"
#include "amp/random.hpp"

namespace amp {

struct SamplingBounds {
  Vector3d position_min = Vector3d::Constant(-5.0);
  Vector3d position_max = Vector3d::Constant(5.0);
  JointLimits joints;
};

struct RRTStarParams {
  double steer_step = 0.3;
  double goal_bias = 0.1;
  double gamma = 2.0;
  int max_iterations = 20000;
  /// Maximum motion of any robot point between collision samples (m).
  double resolution = 0.02;
  /// Extra clearance used by the planner's own checks. Half the resolution
  /// makes sampled clearance imply clearance of the continuous motion.
  double clearance_margin = 0.01;
  ControlSpaceMetric metric;
  SamplingBounds bounds;
};

namespace detail {

class RRTStarTree {
public:
  RRTStarTree(const ObstacleSet& obstacles, const RobotGeometry& geom, const RRTStarParams& params,
              Rng& rng)
      : obstacles_(obstacles), geom_(geom), params_(params), rng_(rng) {}

  std::optional<Path> connect(const ControlSpacePoint& start, const ControlSpacePoint& goal) {
    nodes_.assign(1, Node{start, -1, 0.0, {}});
    const double dim = static_cast<double>(start.dimension());

    for (int it = 0; it < params_.max_iterations; ++it) {
      const ControlSpacePoint target = rng_.uniform() < params_.goal_bias ? goal : sample(start);
      const int nearest = nearest_node(target);
      const ControlSpacePoint candidate = steer(nodes_[nearest].point, target);
      if (!edge_free(nodes_[nearest].point, candidate)) continue;

      const double n = static_cast<double>(nodes_.size() + 1);
      const double radius =
          std::min(params_.gamma * std::pow(std::log(n) / n, 1.0 / dim), params_.steer_step);
      const std::vector<int> near = near_nodes(candidate, radius);

      int parent = nearest;
      double best_cost = nodes_[nearest].cost + distance(nodes_[nearest].point, candidate);
      for (int i : near) {
        if (i == nearest) continue;
        const double c = nodes_[i].cost + distance(nodes_[i].point, candidate);
        if (c < best_cost && edge_free(nodes_[i].point, candidate)) {
          parent = i;
          best_cost = c;
        }
      }
      const int id = static_cast<int>(nodes_.size());
      nodes_.push_back(Node{candidate, parent, best_cost, {}});
      nodes_[parent].children.push_back(id);

      for (int i : near) {
        if (i == parent) continue;
        const double c = best_cost + distance(candidate, nodes_[i].point);
        if (c < nodes_[i].cost && edge_free(candidate, nodes_[i].point)) reparent(i, id, c);
      }
    }
    return extract(goal);
  }

private:
  struct Node {
    ControlSpacePoint point;
    int parent;
    double cost;
    std::vector<int> children;
  };

  double distance(const ControlSpacePoint& a, const ControlSpacePoint& b) const {
    return params_.metric.distance(a, b);
  }

  bool edge_free(const ControlSpacePoint& a, const ControlSpacePoint& b) const {
    return collision_check_segment(a, b, obstacles_, geom_, params_.resolution,
                                   params_.clearance_margin);
  }

  ControlSpacePoint sample(const ControlSpacePoint& like) {
    VectorXd c(like.dimension());
    for (int i = 0; i < 3; ++i) {
      c[i] = rng_.uniform(params_.bounds.position_min[i], params_.bounds.position_max[i]);
    }
    c[3] = wrap_angle(rng_.uniform(-kPi, kPi));
    for (Eigen::Index j = 0; j < like.joint_count(); ++j) {
      c[4 + j] = rng_.uniform(params_.bounds.joints.lower[j], params_.bounds.joints.upper[j]);
    }
    return ControlSpacePoint(std::move(c));
  }

  ControlSpacePoint steer(const ControlSpacePoint& from, const ControlSpacePoint& to) const {
    const double d = distance(from, to);
    if (d <= params_.steer_step) return to;
    return interpolate(from, to, params_.steer_step / d);
  }

  int nearest_node(const ControlSpacePoint& p) const {
    int best = 0;
    double best_d = distance(nodes_[0].point, p);
    for (int i = 1; i < static_cast<int>(nodes_.size()); ++i) {
      const double d = distance(nodes_[i].point, p);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  std::vector<int> near_nodes(const ControlSpacePoint& p, double radius) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
      if (distance(nodes_[i].point, p) <= radius) out.push_back(i);
    }
    return out;
  }

  void reparent(int node, int new_parent, double new_cost) {
    auto& siblings = nodes_[nodes_[node].parent].children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), node));
    nodes_[node].parent = new_parent;
    nodes_[new_parent].children.push_back(node);
    const double delta = new_cost - nodes_[node].cost;
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      nodes_[i].cost += delta;
      for (int c : nodes_[i].children) stack.push_back(c);
    }
  }

  std::optional<Path> extract(const ControlSpacePoint& goal) const {
    std::vector<std::pair<double, int>> candidates;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
      const double d = distance(nodes_[i].point, goal);
      if (d <= params_.steer_step) candidates.emplace_back(nodes_[i].cost + d, i);
    }
    std::sort(candidates.begin(), candidates.end());
    for (const auto& [cost, i] : candidates) {
      if (!edge_free(nodes_[i].point, goal)) continue;
      Path path;
      for (int k = i; k >= 0; k = nodes_[k].parent) path.push_back(nodes_[k].point);
      std::reverse(path.begin(), path.end());
      if (!(path.back() == goal)) path.push_back(goal);
      return path;
    }
    return std::nullopt;
  }

  const ObstacleSet& obstacles_;
  const RobotGeometry& geom_;
  const RRTStarParams& params_;
  Rng& rng_;
  std::vector<Node> nodes_;
};

}  // namespace detail

/// Obstacle-free piecewise-straight path through every waypoint in order.
/// Pairs joined by a free straight segment contribute only their endpoints.
inline Path plan_path(const std::vector<ControlSpacePoint>& waypoints, const ObstacleSet& obstacles,
                      const RobotGeometry& geom, const RRTStarParams& params, std::uint64_t seed) {
  if (waypoints.size() < 2) throw Error("path planning needs at least two waypoints");
  const auto dim = static_cast<Eigen::Index>(4 + geom.arm.actuated_count());
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (waypoints[i].dimension() != dim) {
      throw DimensionError("waypoint " + std::to_string(i) + ": expected dimension " +
                           std::to_string(dim) + ", got " +
                           std::to_string(waypoints[i].dimension()));
    }
    if (!collision_check_config(waypoints[i], obstacles, geom, params.clearance_margin)) {
      throw InvalidWaypoint(i, "configuration is in collision");
    }
  }

  Rng rng(seed);
  Path path{waypoints.front()};
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const auto& a = waypoints[i];
    const auto& b = waypoints[i + 1];
    if (a == b) continue;
    if (collision_check_segment(a, b, obstacles, geom, params.resolution,
                                params.clearance_margin)) {
      path.push_back(b);
      continue;
    }
    detail::RRTStarTree tree(obstacles, geom, params, rng);
    auto piece = tree.connect(a, b);
    if (!piece) {
      throw PlanningTimeout("no path between waypoints " + std::to_string(i) + " and " +
                            std::to_string(i + 1) + " after " +
                            std::to_string(params.max_iterations) + " iterations");
    }
    path.insert(path.end(), piece->begin() + 1, piece->end());
  }
  if (path.size() == 1) path.push_back(waypoints.back());
  return path;
}

/// Random shortcutting. Never lengthens the path, keeps every user waypoint
/// listed in `keep` (indices into the input path) and the endpoints.
inline Path shortcut_path(Path path, const ObstacleSet& obstacles, const RobotGeometry& geom,
                          const RRTStarParams& params, std::uint64_t seed, int rounds,
                          std::vector<std::size_t> keep = {}) {
  if (path.size() < 3 || rounds <= 0) return path;
  Rng rng(seed);
  std::vector<bool> pinned(path.size(), false);
  pinned.front() = pinned.back() = true;
  for (auto k : keep) {
    if (k < pinned.size()) pinned[k] = true;
  }
  for (int r = 0; r < rounds && path.size() > 2; ++r) {
    std::size_t i = rng.index(path.size());
    std::size_t j = rng.index(path.size());
    if (i > j) std::swap(i, j);
    if (j < i + 2) continue;
    if (std::any_of(pinned.begin() + static_cast<long>(i) + 1, pinned.begin() + static_cast<long>(j),
                    [](bool p) { return p; })) {
      continue;
    }
    if (!collision_check_segment(path[i], path[j], obstacles, geom, params.resolution,
                                 params.clearance_margin)) {
      continue;
    }
    path.erase(path.begin() + static_cast<long>(i) + 1, path.begin() + static_cast<long>(j));
    pinned.erase(pinned.begin() + static_cast<long>(i) + 1, pinned.begin() + static_cast<long>(j));
  }
  return path;
}

}  // namespace amp
