#pragma once

// Sphere/capsule clearance against axis-aligned boxes and z-aligned cylinders.

#include <algorithm>
#include <cmath>
#include <vector>

#include "amp/control_space.hpp"
#include "amp/kinematics.hpp"

namespace amp {

struct Box {
  Vector3d min = Vector3d::Zero();
  Vector3d max = Vector3d::Zero();

  double distance(const Vector3d& p) const {
    const Vector3d outside = (min - p).cwiseMax(p - max).cwiseMax(Vector3d::Zero());
    return outside.norm();
  }
};

struct Cylinder {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;

  double distance(const Vector3d& p) const {
    const double radial = std::max((p.head<2>() - center).norm() - radius, 0.0);
    const double axial = std::max({z_min - p.z(), p.z() - z_max, 0.0});
    return std::hypot(radial, axial);
  }
};

struct ObstacleSet {
  std::vector<Box> boxes;
  std::vector<Cylinder> cylinders;
  double inflation = 0.0;  // m, added to every clearance test

  bool empty() const { return boxes.empty() && cylinders.empty(); }
};

namespace detail {

/// Minimum over t in [0, 1] of a convex function, by golden-section search.
template <typename F>
double convex_min_on_unit_interval(F&& f) {
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.0, hi = 1.0;
  double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 60; ++i) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::min({f1, f2, f(0.0), f(1.0)});
}

}  // namespace detail

/// Distance from the segment [a, b] to a convex primitive. The point distance
/// is convex along the segment, so a 1-D search is exact up to its tolerance.
template <typename Primitive>
double segment_distance(const Primitive& prim, const Vector3d& a, const Vector3d& b) {
  const Vector3d ab = b - a;
  return detail::convex_min_on_unit_interval([&](double t) { return prim.distance(a + t * ab); });
}

/// True when a sphere of the given radius is clear of every inflated primitive.
inline bool sphere_clear(const Vector3d& center, double radius, const ObstacleSet& obs) {
  const double r = radius + obs.inflation;
  for (const auto& b : obs.boxes) {
    if (b.distance(center) < r) return false;
  }
  for (const auto& c : obs.cylinders) {
    if (c.distance(center) < r) return false;
  }
  return true;
}

/// True when the capsule [a, b] with the given radius clears every inflated primitive.
inline bool capsule_clear(const Vector3d& a, const Vector3d& b, double radius,
                          const ObstacleSet& obs) {
  const double r = radius + obs.inflation;
  const Vector3d mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a).norm();
  auto clear = [&](const auto& prim) {
    // Distance is 1-Lipschitz: the midpoint bounds the whole segment.
    if (prim.distance(mid) - half >= r) return true;
    return segment_distance(prim, a, b) >= r;
  };
  return std::all_of(obs.boxes.begin(), obs.boxes.end(), clear) &&
         std::all_of(obs.cylinders.begin(), obs.cylinders.end(), clear);
}

/// Collision model of the aerial manipulator: one sphere around the UAV body
/// and one capsule per non-degenerate arm link.
struct RobotGeometry {
  double body_radius = 0.35;
  double link_radius = 0.02;
  HomogeneousTransform body_to_arm;
  DHTable arm;

  /// Upper bound on the distance from the body origin to any arm point.
  double arm_extent() const { return body_to_arm.translation().norm() + arm.reach(); }
};

/// Arm link segments in the world frame for a control-space point, evaluated
/// with zero roll and pitch.
inline std::vector<std::pair<Vector3d, Vector3d>> arm_segments(const ControlSpacePoint& x,
                                                               const RobotGeometry& geom) {
  const auto world_to_body = HomogeneousTransform::from_pose(x.position(), 0.0, 0.0, x.yaw());
  const auto base = world_to_body * geom.body_to_arm;
  const auto frames = link_frames(geom.arm, x.joints());
  std::vector<std::pair<Vector3d, Vector3d>> segs;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const Vector3d a = base * frames[i - 1].translation();
    const Vector3d b = base * frames[i].translation();
    if ((b - a).norm() > 1e-12) segs.emplace_back(a, b);
  }
  return segs;
}

/// True iff the configuration is collision-free. `margin` is extra clearance
/// on top of the obstacle inflation.
inline bool collision_check_config(const ControlSpacePoint& x, const ObstacleSet& obstacles,
                                   const RobotGeometry& geom, double margin = 0.0) {
  if (obstacles.empty()) return true;
  if (!sphere_clear(x.position(), geom.body_radius + margin, obstacles)) return false;
  for (const auto& [a, b] : arm_segments(x, geom)) {
    if (!capsule_clear(a, b, geom.link_radius + margin, obstacles)) return false;
  }
  return true;
}

/// Bound on how far any point of the robot moves between a and b.
inline double motion_bound(const ControlSpacePoint& a, const ControlSpacePoint& b,
                           const RobotGeometry& geom) {
  const double lever = geom.arm_extent();
  double bound = (a.position() - b.position()).norm() + lever * std::abs(wrap_angle(b.yaw() - a.yaw()));
  Eigen::Index j = 0;
  for (const auto& row : geom.arm.rows()) {
    if (row.kind == JointKind::fixed) continue;
    const double dq = std::abs(b.joints()[j] - a.joints()[j]);
    bound += row.kind == JointKind::prismatic ? dq : lever * dq;
    ++j;
  }
  return bound;
}

/// True iff every sample along the straight segment is collision-free, with
/// samples spaced so no robot point moves more than `resolution` between them.
inline bool collision_check_segment(const ControlSpacePoint& a, const ControlSpacePoint& b,
                                    const ObstacleSet& obstacles, const RobotGeometry& geom,
                                    double resolution, double margin = 0.0) {
  if (!(resolution > 0.0)) throw std::invalid_argument("segment resolution must be positive");
  if (obstacles.empty()) return true;
  const auto n = static_cast<long>(std::ceil(motion_bound(a, b, geom) / resolution));
  for (long i = 0; i <= n; ++i) {
    const double t = n == 0 ? 0.0 : static_cast<double>(i) / static_cast<double>(n);
    if (!collision_check_config(interpolate(a, b, t), obstacles, geom, margin)) return false;
  }
  return true;
}

}  // namespace amp
