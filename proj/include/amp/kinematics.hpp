#pragma once

// Rigid transforms, Denavit-Hartenberg chains and damped-least-squares IK.

#include <algorithm>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "amp/core.hpp"

namespace amp {

inline Matrix3d rot_x(double a) {
  return Eigen::AngleAxisd(a, Vector3d::UnitX()).toRotationMatrix();
}
inline Matrix3d rot_y(double a) {
  return Eigen::AngleAxisd(a, Vector3d::UnitY()).toRotationMatrix();
}
inline Matrix3d rot_z(double a) {
  return Eigen::AngleAxisd(a, Vector3d::UnitZ()).toRotationMatrix();
}

/// Roll-pitch-yaw with intrinsic Z-Y-X order: R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Matrix3d rpy_to_matrix(double roll, double pitch, double yaw) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

/// Inverse of rpy_to_matrix for |pitch| < pi/2. Returns (roll, pitch, yaw).
inline Vector3d matrix_to_rpy(const Matrix3d& r) {
  const double pitch = std::atan2(-r(2, 0), std::hypot(r(2, 1), r(2, 2)));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

/// Nearest orthonormal matrix (polar factor) with det = +1.
inline Matrix3d nearest_rotation(const Matrix3d& m) {
  Eigen::JacobiSVD<Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d u = svd.matrixU();
  const Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

class HomogeneousTransform {
public:
  HomogeneousTransform() : rotation_(Matrix3d::Identity()), translation_(Vector3d::Zero()) {}
  HomogeneousTransform(const Matrix3d& rotation, const Vector3d& translation)
      : rotation_(rotation), translation_(translation) {}

  static HomogeneousTransform identity() { return {}; }
  static HomogeneousTransform from_translation(const Vector3d& t) {
    return {Matrix3d::Identity(), t};
  }
  static HomogeneousTransform from_rotation(const Matrix3d& r) { return {r, Vector3d::Zero()}; }
  /// Pose from position and Z-Y-X roll/pitch/yaw.
  static HomogeneousTransform from_pose(const Vector3d& p, double roll, double pitch,
                                        double yaw) {
    return {rpy_to_matrix(roll, pitch, yaw), p};
  }
  static HomogeneousTransform from_matrix(const Eigen::Matrix4d& m) {
    return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
  }

  const Matrix3d& rotation() const { return rotation_; }
  const Vector3d& translation() const { return translation_; }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  HomogeneousTransform operator*(const HomogeneousTransform& rhs) const {
    return {rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_};
  }
  Vector3d operator*(const Vector3d& point) const { return rotation_ * point + translation_; }

  HomogeneousTransform inverse() const {
    const Matrix3d rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
  }

  HomogeneousTransform orthonormalized() const {
    return {nearest_rotation(rotation_), translation_};
  }

private:
  Matrix3d rotation_;
  Vector3d translation_;
};

/// Multiplies transforms left to right, re-projecting the rotation onto SO(3)
/// every kRenormalizeEvery compositions so long chains do not drift.
class TransformAccumulator {
public:
  static constexpr int kRenormalizeEvery = 64;

  explicit TransformAccumulator(HomogeneousTransform start = {}) : value_(std::move(start)) {}

  TransformAccumulator& operator*=(const HomogeneousTransform& rhs) {
    value_ = value_ * rhs;
    if (++since_renormalize_ == kRenormalizeEvery) {
      value_ = value_.orthonormalized();
      since_renormalize_ = 0;
    }
    return *this;
  }

  const HomogeneousTransform& value() const { return value_; }

private:
  HomogeneousTransform value_;
  int since_renormalize_ = 0;
};

struct PoseError {
  double translation = 0.0;  // m
  double rotation = 0.0;     // rad
};

/// Euclidean position difference and angle of the relative rotation.
inline PoseError pose_error(const HomogeneousTransform& a, const HomogeneousTransform& b) {
  PoseError e;
  e.translation = (a.translation() - b.translation()).norm();
  const Matrix3d rel = a.rotation().transpose() * b.rotation();
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near 0; use the skew part there.
  const Vector3d s(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  e.rotation = std::atan2(0.5 * s.norm(), c);
  return e;
}

// ---------------------------------------------------------------------------
// Denavit-Hartenberg chains

enum class JointKind { rotational, prismatic, fixed };

struct DHRow {
  double theta_offset = 0.0;  // rad
  double d = 0.0;             // m
  double alpha = 0.0;         // rad
  double a = 0.0;             // m
  JointKind kind = JointKind::rotational;
};

class DHTable {
public:
  DHTable() = default;
  explicit DHTable(std::vector<DHRow> rows) : rows_(std::move(rows)) {
    for (const auto& r : rows_) {
      if (r.kind != JointKind::fixed) ++actuated_count_;
    }
  }

  const std::vector<DHRow>& rows() const { return rows_; }
  std::size_t actuated_count() const { return actuated_count_; }

  /// Summed link lengths, an upper bound on the distance between the chain
  /// base and the end effector.
  double reach() const {
    double r = 0.0;
    for (const auto& row : rows_) r += std::abs(row.a) + std::abs(row.d);
    return r;
  }

  /// The 3-DoF single-arm manipulator: base yaw joint, two pitch joints, and a
  /// fixed 0.4 m end-effector stick.
  static DHTable three_dof_arm() {
    return DHTable({
        {kPi / 2.0, 0.0, 3.0 * kPi / 2.0, 0.1365, JointKind::rotational},
        {0.0, 0.0, 0.0, 0.0725, JointKind::rotational},
        {3.0 * kPi / 2.0, 0.0, 3.0 * kPi / 2.0, 0.0, JointKind::rotational},
        {0.0, 0.4, 0.0, 0.0, JointKind::fixed},
    });
  }

private:
  std::vector<DHRow> rows_;
  std::size_t actuated_count_ = 0;
};

/// Rot_z(theta) * Trans_z(d) * Trans_x(a) * Rot_x(alpha), with the joint value
/// added to theta (rotational) or d (prismatic). Fixed rows ignore q.
inline HomogeneousTransform dh_transform(const DHRow& row, double q) {
  double theta = row.theta_offset;
  double d = row.d;
  if (row.kind == JointKind::rotational) theta += q;
  if (row.kind == JointKind::prismatic) d += q;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Matrix3d r;
  r << ct, -st * ca, st * sa,
       st, ct * ca, -ct * sa,
       0.0, sa, ca;
  return {r, Vector3d(row.a * ct, row.a * st, d)};
}

/// Frames of every row boundary: element 0 is the chain base (identity),
/// element i is the frame after row i, the last one is the end effector.
inline std::vector<HomogeneousTransform> link_frames(const DHTable& table, const JointVector& q) {
  require_dimension(q.size(), static_cast<Eigen::Index>(table.actuated_count()),
                    "joint vector");
  std::vector<HomogeneousTransform> frames;
  frames.reserve(table.rows().size() + 1);
  TransformAccumulator acc;
  frames.push_back(acc.value());
  Eigen::Index j = 0;
  for (const auto& row : table.rows()) {
    const double qi = row.kind == JointKind::fixed ? 0.0 : q[j++];
    acc *= dh_transform(row, qi);
    frames.push_back(acc.value());
  }
  return frames;
}

inline HomogeneousTransform forward_kinematics(const DHTable& table, const JointVector& q) {
  return link_frames(table, q).back();
}

/// T_W^ee = T_W^B * T_B^L0 * FK(q).
inline HomogeneousTransform chain_world_to_ee(const HomogeneousTransform& world_to_body,
                                              const HomogeneousTransform& body_to_arm,
                                              const DHTable& table, const JointVector& q) {
  return world_to_body * body_to_arm * forward_kinematics(table, q);
}

/// 6 x M geometric Jacobian (linear rows first) of the end effector in the
/// chain base frame.
inline Eigen::MatrixXd geometric_jacobian(const DHTable& table, const JointVector& q) {
  const auto frames = link_frames(table, q);
  const Vector3d tip = frames.back().translation();
  Eigen::MatrixXd jac(6, static_cast<Eigen::Index>(table.actuated_count()));
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < table.rows().size(); ++i) {
    const auto kind = table.rows()[i].kind;
    if (kind == JointKind::fixed) continue;
    const Vector3d axis = frames[i].rotation().col(2);
    if (kind == JointKind::rotational) {
      jac.block<3, 1>(0, col) = axis.cross(tip - frames[i].translation());
      jac.block<3, 1>(3, col) = axis;
    } else {
      jac.block<3, 1>(0, col) = axis;
      jac.block<3, 1>(3, col).setZero();
    }
    ++col;
  }
  return jac;
}

struct JointLimits {
  JointVector lower;
  JointVector upper;

  JointVector clamp(const JointVector& q) const { return q.cwiseMax(lower).cwiseMin(upper); }
  bool contains(const JointVector& q, double tol = 0.0) const {
    return ((q - lower).array() >= -tol).all() && ((upper - q).array() >= -tol).all();
  }
};

struct IKOptions {
  double damping = 1e-3;
  int max_iterations = 200;
  double tolerance = 1e-8;
  double position_weight = 1.0;  // 1/m
  double rotation_weight = 0.5;  // 1/rad
  /// Translation residual (m) above which a solution counts as unreachable.
  double accept_tol = 1e-3;
  std::optional<JointLimits> limits;
};

struct IKResult {
  JointVector q;
  /// Weighted pose residual sqrt((wp*dp)^2 + (wr*dr)^2).
  double residual = 0.0;
  PoseError error;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline Eigen::Matrix<double, 6, 1> weighted_pose_residual(const HomogeneousTransform& target,
                                                          const HomogeneousTransform& current,
                                                          const IKOptions& opts) {
  Eigen::Matrix<double, 6, 1> e;
  e.head<3>() = opts.position_weight * (target.translation() - current.translation());
  const Eigen::AngleAxisd aa(target.rotation() * current.rotation().transpose());
  e.tail<3>() = opts.rotation_weight * aa.angle() * aa.axis();
  return e;
}

}  // namespace detail

/// Damped least-squares IK started from seed. Non-convergence is reported
/// through the residual, never thrown: the result is the best configuration
/// found, which for a seed near a solution is the solution closest to it.
inline IKResult inverse_kinematics(const DHTable& table, const HomogeneousTransform& target,
                                   const JointVector& seed, const IKOptions& opts = {}) {
  const auto m = static_cast<Eigen::Index>(table.actuated_count());
  require_dimension(seed.size(), m, "IK seed");

  Eigen::Matrix<double, 6, 1> weights;
  weights << Vector3d::Constant(opts.position_weight), Vector3d::Constant(opts.rotation_weight);
  const double lambda2 = opts.damping * opts.damping;

  IKResult best;
  best.q = opts.limits ? opts.limits->clamp(seed) : seed;
  auto e = detail::weighted_pose_residual(target, forward_kinematics(table, best.q), opts);
  best.residual = e.norm();

  JointVector q = best.q;
  for (int it = 0; it < opts.max_iterations; ++it) {
    best.iterations = it;
    if (best.residual <= opts.tolerance) {
      best.converged = true;
      break;
    }
    const Eigen::MatrixXd jac = weights.asDiagonal() * geometric_jacobian(table, q);
    const Eigen::MatrixXd normal =
        jac.transpose() * jac + lambda2 * Eigen::MatrixXd::Identity(m, m);
    JointVector step = normal.ldlt().solve(jac.transpose() * e);
    JointVector next = q + step;
    if (opts.limits) next = opts.limits->clamp(next);
    const auto e_next =
        detail::weighted_pose_residual(target, forward_kinematics(table, next), opts);
    const double r_next = e_next.norm();
    const double moved = (next - q).norm();
    q = next;
    e = e_next;
    if (r_next <= best.residual) {
      best.q = q;
      best.residual = r_next;
    }
    if (moved <= opts.tolerance) {
      // Stalled: either at the solution or at a local minimum of the residual.
      best.iterations = it + 1;
      best.converged = best.residual <= opts.tolerance;
      break;
    }
  }
  best.error = pose_error(target, forward_kinematics(table, best.q));
  return best;
}

}  // namespace amp
