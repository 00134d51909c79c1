#pragma once

// End-effector pose compensation: the arm portion of a planned trajectory is
// rewritten through IK so that the end effector keeps its planned world pose
// once the simulated roll and pitch of the base are taken into account.

#include <vector>

#include "amp/dynamics.hpp"
#include "amp/kinematics.hpp"
#include "amp/topp_ra.hpp"

namespace amp {

/// Desired end-effector poses: the planned base pose with zero roll and pitch
/// chained through the arm at the planned joint values.
inline std::vector<HomogeneousTransform> desired_ee_poses(const SampledTrajectory& traj,
                                                          const HomogeneousTransform& body_to_arm,
                                                          const DHTable& table) {
  const Eigen::Index m = static_cast<Eigen::Index>(table.actuated_count());
  require_dimension(traj.joint_count(), m, "trajectory joints");
  std::vector<HomogeneousTransform> out;
  out.reserve(traj.size());
  for (const auto& pt : traj.points) {
    const auto world_to_body = HomogeneousTransform::from_pose(pt.q.head<3>(), 0.0, 0.0, pt.q[3]);
    out.push_back(chain_world_to_ee(world_to_body, body_to_arm, table, pt.q.tail(m)));
  }
  return out;
}

struct CompensationOptions {
  IKOptions ik;
  /// Joint position limits; solutions are clamped into them.
  std::optional<JointLimits> joint_limits;
  /// Joint velocity/acceleration limits for the post-compensation audit.
  std::optional<KinodynamicLimits> limits;
  /// Relative excess over the limits tolerated by the audit.
  double audit_slack = 0.05;
  /// Consecutive joint steps may exceed v_max * T_s by this factor before
  /// being flagged as discontinuous.
  double continuity_factor = 1.5;
};

struct SampleResidual {
  double weighted = 0.0;
  double translation = 0.0;  // m
  double rotation = 0.0;     // rad
};

struct CompensationResult {
  SampledTrajectory compensated;
  std::vector<SampleResidual> residuals;
  std::size_t unreachable_count = 0;
  std::vector<std::size_t> joint_limit_clamped;
  std::vector<std::size_t> continuity_violations;
  std::vector<std::size_t> velocity_limit_flags;
  std::vector<std::size_t> acceleration_limit_flags;

  bool limit_audit_passed() const {
    return velocity_limit_flags.empty() && acceleration_limit_flags.empty();
  }
};

/// Target of the arm in its base frame, (T_B^L0)^-1 (T_W^B)^-1 T_W^ee, where
/// T_W^B carries the planned position and yaw and the simulated roll/pitch.
inline HomogeneousTransform arm_frame_target(const FullTrajectoryPoint& enriched,
                                             const HomogeneousTransform& body_to_arm,
                                             const HomogeneousTransform& desired_world_ee) {
  const auto world_to_body = HomogeneousTransform::from_pose(
      enriched.q.head<3>(), enriched.q[3], enriched.q[4], enriched.q[5]);
  return body_to_arm.inverse() * world_to_body.inverse() * desired_world_ee;
}

/// Rewrites the joint columns against explicit desired poses. IK at sample k is
/// seeded with the solution at k - 1 (sample 0 with the planned joints), so
/// every solution is the one closest to the previous configuration.
inline CompensationResult compensate(const SampledTrajectory& traj,
                                     const std::vector<FullTrajectoryPoint>& enriched,
                                     const std::vector<HomogeneousTransform>& desired,
                                     const HomogeneousTransform& body_to_arm, const DHTable& table,
                                     const CompensationOptions& opts = {}) {
  const Eigen::Index m = static_cast<Eigen::Index>(table.actuated_count());
  require_dimension(traj.joint_count(), m, "trajectory joints");
  if (enriched.size() != traj.size() || desired.size() != traj.size()) {
    throw DimensionError("trajectory, enriched trajectory and desired poses differ in length");
  }

  CompensationResult r;
  r.compensated = traj;
  r.residuals.resize(traj.size());
  const IKOptions& ik = opts.ik;

  std::vector<bool> changed(traj.size(), false);
  JointVector seed = traj.size() ? JointVector(traj.points.front().q.tail(m)) : JointVector();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto target = arm_frame_target(enriched[k], body_to_arm, desired[k]);
    const JointVector planned = traj.points[k].q.tail(m);
    const auto planned_fk = forward_kinematics(table, planned);
    const double planned_residual =
        detail::weighted_pose_residual(target, planned_fk, ik).norm();

    JointVector q;
    SampleResidual res;
    auto record = [&](const JointVector& sol) {
      const auto fk = forward_kinematics(table, sol);
      res.weighted = detail::weighted_pose_residual(target, fk, ik).norm();
      const auto e = pose_error(target, fk);
      res.translation = e.translation;
      res.rotation = e.rotation;
    };
    if (planned_residual <= ik.tolerance) {
      // Planned joints already realize the desired pose; keep them untouched.
      q = planned;
      record(q);
    } else {
      const auto sol = inverse_kinematics(table, target, seed, ik);
      q = sol.q;
      res.weighted = sol.residual;
      res.translation = sol.error.translation;
      res.rotation = sol.error.rotation;
      changed[k] = q != planned;
    }
    if (opts.joint_limits && !opts.joint_limits->contains(q)) {
      q = opts.joint_limits->clamp(q);
      record(q);
      r.joint_limit_clamped.push_back(k);
      changed[k] = q != planned;
    }
    if (res.translation > ik.accept_tol) ++r.unreachable_count;
    r.residuals[k] = res;
    r.compensated.points[k].q.tail(m) = q;
    seed = q;
  }

  // Joint rates from central differences wherever a neighbourhood changed.
  const double h = traj.sample_time;
  for (Eigen::Index j = 0; j < m; ++j) {
    std::vector<double> y(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) y[k] = r.compensated.points[k].q[4 + j];
    const auto [d1, d2] = finite_difference(y, h);
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const bool touched = changed[k] || (k > 0 && changed[k - 1]) ||
                           (k + 1 < traj.size() && changed[k + 1]);
      if (!touched) continue;
      r.compensated.points[k].dq[4 + j] = d1[k];
      r.compensated.points[k].ddq[4 + j] = d2[k];
    }
  }

  if (opts.limits) {
    const auto& lim = *opts.limits;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const auto& pt = r.compensated.points[k];
      bool v_flag = false, a_flag = false;
      for (Eigen::Index j = 0; j < m; ++j) {
        v_flag |= std::abs(pt.dq[4 + j]) > lim.v_max[4 + j] * (1.0 + opts.audit_slack);
        a_flag |= std::abs(pt.ddq[4 + j]) > lim.a_max[4 + j] * (1.0 + opts.audit_slack);
      }
      if (v_flag) r.velocity_limit_flags.push_back(k);
      if (a_flag) r.acceleration_limit_flags.push_back(k);
      if (k > 0) {
        const VectorXd step = (pt.q.tail(m) - r.compensated.points[k - 1].q.tail(m)).cwiseAbs();
        const VectorXd bound = lim.v_max.tail(m) * (h * opts.continuity_factor);
        if ((step.array() > bound.array()).any()) r.continuity_violations.push_back(k);
      }
    }
  }
  return r;
}

/// Compensation against the desired poses implied by the trajectory itself.
inline CompensationResult compensate(const SampledTrajectory& traj,
                                     const std::vector<FullTrajectoryPoint>& enriched,
                                     const HomogeneousTransform& body_to_arm, const DHTable& table,
                                     const CompensationOptions& opts = {}) {
  return compensate(traj, enriched, desired_ee_poses(traj, body_to_arm, table), body_to_arm, table,
                    opts);
}

struct TrackingError {
  double t = 0.0;
  double translation = 0.0;  // m
  double rotation = 0.0;     // rad
  double z = 0.0;            // executed minus desired, m
};

/// Per-sample error between desired end-effector poses and the poses implied
/// by executed states (true attitude and actual joint positions).
inline std::vector<TrackingError> evaluate_tracking(
    const std::vector<HomogeneousTransform>& desired, const std::vector<double>& times,
    const std::vector<FullState>& executed, const HomogeneousTransform& body_to_arm,
    const DHTable& table) {
  if (desired.size() != executed.size() || times.size() != executed.size()) {
    throw DimensionError("desired poses and executed states differ in length");
  }
  std::vector<TrackingError> out(desired.size());
  for (std::size_t k = 0; k < desired.size(); ++k) {
    const auto actual =
        chain_world_to_ee(executed[k].world_to_body(), body_to_arm, table, executed[k].joints);
    const auto e = pose_error(desired[k], actual);
    out[k] = {times[k], e.translation, e.rotation,
              actual.translation().z() - desired[k].translation().z()};
  }
  return out;
}

}  // namespace amp
