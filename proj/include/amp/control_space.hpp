#pragma once

#include <vector>

#include "amp/core.hpp"

namespace amp {

/// Directly commandable coordinates of the aerial manipulator:
/// [x, y, z, psi, q_1 .. q_M]. Roll and pitch are absent on purpose.
class ControlSpacePoint {
public:
  ControlSpacePoint() = default;
  explicit ControlSpacePoint(VectorXd coords) : coords_(std::move(coords)) {
    if (coords_.size() < 4) throw DimensionError("control-space point needs at least 4 coordinates");
  }
  ControlSpacePoint(const Vector3d& position, double yaw, const JointVector& joints)
      : coords_(4 + joints.size()) {
    coords_ << position, yaw, joints;
  }

  Eigen::Index dimension() const { return coords_.size(); }
  Eigen::Index joint_count() const { return coords_.size() - 4; }

  Vector3d position() const { return coords_.head<3>(); }
  double yaw() const { return coords_[3]; }
  JointVector joints() const { return coords_.tail(joint_count()); }

  const VectorXd& coords() const { return coords_; }
  double operator[](Eigen::Index i) const { return coords_[i]; }

  friend bool operator==(const ControlSpacePoint& a, const ControlSpacePoint& b) {
    return a.coords_.size() == b.coords_.size() && a.coords_ == b.coords_;
  }

private:
  VectorXd coords_;
};

/// Weighted Euclidean metric on control space; the yaw difference is taken
/// along the shortest arc.
struct ControlSpaceMetric {
  double position_weight = 1.0;
  double yaw_weight = 0.5;
  double joint_weight = 0.3;

  double distance(const ControlSpacePoint& a, const ControlSpacePoint& b) const {
    const double dp = (a.position() - b.position()).squaredNorm();
    const double dy = wrap_angle(a.yaw() - b.yaw());
    const double dq = (a.joints() - b.joints()).squaredNorm();
    return std::sqrt(position_weight * position_weight * dp + yaw_weight * yaw_weight * dy * dy +
                     joint_weight * joint_weight * dq);
  }
};

/// Straight-line interpolation with yaw along the shortest arc, wrapped to
/// (-pi, pi]. t = 0 and t = 1 return the endpoints exactly.
inline ControlSpacePoint interpolate(const ControlSpacePoint& a, const ControlSpacePoint& b,
                                     double t) {
  if (t <= 0.0) return a;
  if (t >= 1.0) return b;
  VectorXd c = a.coords() + t * (b.coords() - a.coords());
  c[3] = wrap_angle(a.yaw() + t * wrap_angle(b.yaw() - a.yaw()));
  return ControlSpacePoint(std::move(c));
}

using Path = std::vector<ControlSpacePoint>;

inline double path_length(const Path& path, const ControlSpaceMetric& metric) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) len += metric.distance(path[i - 1], path[i]);
  return len;
}

}  // namespace amp
