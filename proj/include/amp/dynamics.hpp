#pragma once

// Multirotor rigid-body model with servo-driven arm joints, the flatness map
// from acceleration to attitude, and a cascaded tracking controller used to
// estimate the roll/pitch a planned trajectory will actually produce.

#include <algorithm>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "amp/kinematics.hpp"
#include "amp/random.hpp"
#include "amp/topp_ra.hpp"

namespace amp {

struct MultirotorParams {
  double mass = 3.42;                                          // kg
  Vector3d inertia_diag = Vector3d(0.0347563, 0.0458929, 0.0977);  // kg m^2
  double gravity = kStandardGravity;
  double f_max = 15.0;  // N per rotor
  /// Maps rotor thrusts to [u1 (net thrust), u2, u3, u4 (body moments)].
  Eigen::MatrixXd mixing;
  double workspace_radius = 100.0;  // m

  Eigen::Index rotor_count() const { return mixing.cols(); }

  /// Moore-Penrose inverse K^T (K K^T)^-1 of the mixing matrix.
  Eigen::MatrixXd mixing_pinv() const {
    return mixing.transpose() * (mixing * mixing.transpose()).inverse();
  }

  void validate() const {
    if (!(mass > 0.0) || !(f_max > 0.0) || (inertia_diag.array() <= 0.0).any()) {
      throw Error("mass, inertia and rotor thrust bound must be positive");
    }
    if (mixing.rows() != 4) throw DimensionError("mixing matrix must have 4 rows");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(mixing);
    if (lu.rank() < 4) throw Error("mixing matrix must have full row rank");
  }
};

/// Flat-frame multirotor with rotors evenly spaced on a circle of radius
/// arm_length, rotor 0 on the body x axis, spin directions alternating.
/// drag_coefficient is the yaw moment per newton of thrust (m).
inline Eigen::MatrixXd symmetric_mixing(int rotors, double arm_length, double drag_coefficient) {
  Eigen::MatrixXd k(4, rotors);
  for (int i = 0; i < rotors; ++i) {
    const double angle = 2.0 * kPi * i / rotors;
    k(0, i) = 1.0;
    k(1, i) = arm_length * std::sin(angle);
    k(2, i) = -arm_length * std::cos(angle);
    k(3, i) = (i % 2 == 0 ? 1.0 : -1.0) * drag_coefficient;
  }
  return k;
}

inline MultirotorParams default_hexarotor() {
  MultirotorParams p;
  p.mixing = symmetric_mixing(6, 0.215, 0.016);
  return p;
}

struct FullState {
  Vector3d position = Vector3d::Zero();
  Vector3d velocity = Vector3d::Zero();
  Vector3d attitude = Vector3d::Zero();  // roll, pitch, yaw (Z-Y-X)
  Vector3d body_rates = Vector3d::Zero();  // p, q, r
  JointVector joints;
  JointVector joint_rates;

  double roll() const { return attitude[0]; }
  double pitch() const { return attitude[1]; }
  double yaw() const { return attitude[2]; }

  HomogeneousTransform world_to_body() const {
    return HomogeneousTransform::from_pose(position, roll(), pitch(), yaw());
  }
};

struct Wrench {
  Vector3d force = Vector3d::Zero();   // world frame, N
  Vector3d torque = Vector3d::Zero();  // body frame, N m
};

// ---------------------------------------------------------------------------
// Differential flatness

struct FlatAttitude {
  double roll = 0.0;
  double pitch = 0.0;
  double thrust = 0.0;  // u1, N
};

/// Attitude and net thrust that realize a world-frame acceleration at the given
/// yaw: the body z axis points along accel + g e_z.
inline FlatAttitude flat_attitude(const Vector3d& accel, double yaw, const MultirotorParams& params) {
  const Vector3d thrust_dir = accel + params.gravity * Vector3d::UnitZ();
  const double norm = thrust_dir.norm();
  if (!(norm > 0.1 * params.gravity)) {
    throw FlatnessSingularity("commanded acceleration leaves no thrust direction (free fall)");
  }
  const Vector3d zb = thrust_dir / norm;
  const Vector3d xc(std::cos(yaw), std::sin(yaw), 0.0);
  const Vector3d yb = zb.cross(xc).normalized();
  const Vector3d xb = yb.cross(zb);
  FlatAttitude out;
  // Z-Y-X extraction from R = [xb yb zb].
  out.pitch = std::atan2(-xb.z(), std::hypot(yb.z(), zb.z()));
  out.roll = std::atan2(yb.z(), zb.z());
  out.thrust = params.mass * norm;
  return out;
}

struct FeasibilityLimits {
  double max_tilt = 0.6;  // rad, angle between body z and world z
};

struct FeasibilityReport {
  std::size_t samples = 0;
  std::vector<std::size_t> tilt_violations;
  std::vector<std::size_t> thrust_violations;
  std::vector<std::size_t> singular_samples;
  double peak_tilt = 0.0;
  double peak_rotor_force = 0.0;

  bool feasible() const {
    return tilt_violations.empty() && thrust_violations.empty() && singular_samples.empty();
  }
};

/// Evaluates the flatness map along a trajectory's acceleration stream and
/// flags samples that need more tilt or rotor thrust than available. Hover
/// moments are zero, so rotor forces come from K^+ (u1, 0, 0, 0).
inline FeasibilityReport feasibility_check(const SampledTrajectory& traj,
                                           const MultirotorParams& params,
                                           const FeasibilityLimits& limits) {
  FeasibilityReport r;
  r.samples = traj.size();
  const Eigen::MatrixXd pinv = params.mixing_pinv();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& pt = traj.points[k];
    FlatAttitude fa;
    try {
      fa = flat_attitude(pt.ddq.head<3>(), pt.q[3], params);
    } catch (const FlatnessSingularity&) {
      r.singular_samples.push_back(k);
      continue;
    }
    const double tilt = std::acos(std::clamp(std::cos(fa.roll) * std::cos(fa.pitch), -1.0, 1.0));
    r.peak_tilt = std::max(r.peak_tilt, tilt);
    if (tilt > limits.max_tilt) r.tilt_violations.push_back(k);
    Eigen::Vector4d u(fa.thrust, 0.0, 0.0, 0.0);
    const VectorXd f = pinv * u;
    r.peak_rotor_force = std::max(r.peak_rotor_force, f.maxCoeff());
    if (f.maxCoeff() > params.f_max || f.minCoeff() < 0.0) r.thrust_violations.push_back(k);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rigid-body dynamics

namespace detail {

struct StateDerivative {
  Vector3d dp, dv, dattitude, dw;
  JointVector dq, ddq;
};

/// Maps body rates to Z-Y-X Euler angle rates.
inline Vector3d euler_rates(const Vector3d& attitude, const Vector3d& w) {
  const double sr = std::sin(attitude[0]), cr = std::cos(attitude[0]);
  const double tp = std::tan(attitude[1]), cp = std::cos(attitude[1]);
  return {w[0] + sr * tp * w[1] + cr * tp * w[2], cr * w[1] - sr * w[2], (sr * w[1] + cr * w[2]) / cp};
}

inline StateDerivative derivative(const FullState& s, double thrust, const Vector3d& moments,
                                  const JointVector& joint_torques, const Wrench& disturbance,
                                  const MultirotorParams& params) {
  StateDerivative d;
  const Matrix3d r = rpy_to_matrix(s.roll(), s.pitch(), s.yaw());
  d.dp = s.velocity;
  d.dv = (r.col(2) * thrust + disturbance.force) / params.mass - params.gravity * Vector3d::UnitZ();
  d.dattitude = euler_rates(s.attitude, s.body_rates);
  const Vector3d iw = params.inertia_diag.cwiseProduct(s.body_rates);
  d.dw = (moments + disturbance.torque - s.body_rates.cross(iw)).cwiseQuotient(params.inertia_diag);
  d.dq = s.joint_rates;
  d.ddq = joint_torques;  // unit-inertia servo joints
  return d;
}

inline FullState advance(const FullState& s, const StateDerivative& d, double h) {
  FullState o = s;
  o.position += h * d.dp;
  o.velocity += h * d.dv;
  o.attitude += h * d.dattitude;
  o.body_rates += h * d.dw;
  o.joints += h * d.dq;
  o.joint_rates += h * d.ddq;
  return o;
}

}  // namespace detail

/// One RK4 step of the base rigid body and the arm joints with inputs held
/// constant over dt. Arm reaction on the base enters only through
/// `disturbance`.
inline FullState step_dynamics(const FullState& state, const VectorXd& rotor_forces,
                               const JointVector& joint_torques, const MultirotorParams& params,
                               double dt, const Wrench& disturbance = {}, double t = 0.0) {
  if (!(dt > 0.0 && dt <= 0.02)) throw std::invalid_argument("dt must lie in (0, 0.02] s");
  require_dimension(rotor_forces.size(), params.rotor_count(), "rotor forces");
  require_dimension(joint_torques.size(), state.joints.size(), "joint torques");
  if (rotor_forces.minCoeff() < 0.0 || rotor_forces.maxCoeff() > params.f_max) {
    throw std::invalid_argument("rotor forces outside [0, f_max]");
  }
  const VectorXd u = params.mixing * rotor_forces;
  const Vector3d moments = u.tail<3>();
  auto f = [&](const FullState& s) {
    return detail::derivative(s, u[0], moments, joint_torques, disturbance, params);
  };
  const auto k1 = f(state);
  const auto k2 = f(detail::advance(state, k1, dt / 2.0));
  const auto k3 = f(detail::advance(state, k2, dt / 2.0));
  const auto k4 = f(detail::advance(state, k3, dt));
  FullState out = state;
  const double w = dt / 6.0;
  out.position += w * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
  out.velocity += w * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  out.attitude += w * (k1.dattitude + 2.0 * k2.dattitude + 2.0 * k3.dattitude + k4.dattitude);
  out.body_rates += w * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
  out.joints += w * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
  out.joint_rates += w * (k1.ddq + 2.0 * k2.ddq + 2.0 * k3.ddq + k4.ddq);

  if (std::abs(out.roll()) >= kPi / 2.0 || std::abs(out.pitch()) >= kPi / 2.0) {
    throw StateDivergence(t + dt, "roll or pitch reached pi/2");
  }
  if (!out.position.allFinite() || out.position.norm() > params.workspace_radius) {
    throw StateDivergence(t + dt, "position left the workspace bound");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Arm-on-base disturbance

struct DisturbanceModel {
  double force_bound = 0.2;    // N, per axis
  double torque_bound = 0.02;  // N m, per axis
  /// Random-walk increment per update, as a fraction of the bound.
  double step_fraction = 0.05;
  std::uint64_t seed = 1;
};

/// Bounded random walk, reflected at the bounds.
class DisturbanceProcess {
public:
  explicit DisturbanceProcess(const DisturbanceModel& model) : model_(model), rng_(model.seed) {}

  const Wrench& current() const { return wrench_; }

  void update() {
    for (int i = 0; i < 3; ++i) {
      wrench_.force[i] = walk(wrench_.force[i], model_.force_bound);
      wrench_.torque[i] = walk(wrench_.torque[i], model_.torque_bound);
    }
  }

private:
  double walk(double value, double bound) {
    if (bound <= 0.0) return 0.0;
    double v = value + model_.step_fraction * bound * rng_.uniform(-1.0, 1.0);
    if (v > bound) v = 2.0 * bound - v;
    if (v < -bound) v = -2.0 * bound - v;
    return std::clamp(v, -bound, bound);
  }

  DisturbanceModel model_;
  Rng rng_;
  Wrench wrench_;
};

// ---------------------------------------------------------------------------
// Tracking controller and closed-loop simulation

struct ControllerGains {
  Vector3d position_kp = Vector3d(2.0, 2.0, 3.0);
  Vector3d position_ki = Vector3d(0.1, 0.1, 0.2);
  Vector3d position_kd = Vector3d(2.2, 2.2, 2.6);
  double integral_limit = 0.5;  // m s
  double max_tilt = 0.6;        // rad, limit on commanded tilt
  Vector3d attitude_kp = Vector3d(400.0, 400.0, 100.0);  // 1/s^2
  Vector3d attitude_kd = Vector3d(36.0, 36.0, 20.0);     // 1/s
  double joint_bandwidth = 30.0;  // rad/s, critically damped servo
  double joint_rate_limit = 5.0;  // rad/s
};

struct SimulationOptions {
  double dt = 0.001;
  DisturbanceModel disturbance;
};

/// States recorded at every trajectory sample time, before the control update
/// for that sample is applied.
struct SimulationResult {
  std::vector<double> times;
  std::vector<FullState> states;
};

/// Cascaded closed loop: position PID at the trajectory rate produces an
/// acceleration command, the flatness map turns it into roll/pitch/thrust
/// setpoints, and an attitude PD at the integration rate produces body
/// moments. Rotor forces are K^+ u clipped to [0, f_max]; joints track their
/// references through servo dynamics.
inline SimulationResult simulate_tracking(const SampledTrajectory& traj,
                                          const MultirotorParams& params,
                                          const ControllerGains& gains,
                                          const SimulationOptions& opts,
                                          std::optional<FullState> initial = std::nullopt) {
  SimulationResult out;
  if (traj.points.empty()) return out;
  const double ts = traj.sample_time;
  const double ratio = ts / opts.dt;
  const auto substeps = static_cast<long>(std::llround(ratio));
  if (substeps < 1 || std::abs(ratio - static_cast<double>(substeps)) > 1e-9 * ratio) {
    throw Error("simulation step must divide the trajectory sample time");
  }
  const Eigen::MatrixXd pinv = params.mixing_pinv();
  const Eigen::Index m = traj.joint_count();

  FullState s;
  if (initial) {
    s = *initial;
  } else {
    const auto& p0 = traj.points.front();
    s.position = p0.q.head<3>();
    s.velocity = p0.dq.head<3>();
    s.attitude = Vector3d(0.0, 0.0, p0.q[3]);
    s.joints = p0.q.tail(m);
    s.joint_rates = p0.dq.tail(m);
  }
  DisturbanceProcess disturbance(opts.disturbance);
  Vector3d integral = Vector3d::Zero();
  const double tan_max = std::tan(gains.max_tilt);
  const double w = gains.joint_bandwidth;

  out.times.reserve(traj.size());
  out.states.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& ref = traj.points[k];
    const double t = ref.t;
    out.times.push_back(t);
    out.states.push_back(s);
    if (k + 1 == traj.size()) break;

    // Position loop.
    const Vector3d e = ref.q.head<3>() - s.position;
    const Vector3d ev = ref.dq.head<3>() - s.velocity;
    integral = (integral + e * ts).cwiseMax(-Vector3d::Constant(gains.integral_limit))
                   .cwiseMin(Vector3d::Constant(gains.integral_limit));
    Vector3d accel = ref.ddq.head<3>() + gains.position_kp.cwiseProduct(e) +
                     gains.position_kd.cwiseProduct(ev) + gains.position_ki.cwiseProduct(integral);
    // Keep the commanded tilt inside the allowed cone.
    const double vertical = accel.z() + params.gravity;
    const double horizontal = accel.head<2>().norm();
    if (vertical > 0.0 && horizontal > tan_max * vertical) {
      accel.head<2>() *= tan_max * vertical / horizontal;
    }
    const FlatAttitude sp = flat_attitude(accel, ref.q[3], params);
    const Vector3d att_ref(sp.roll, sp.pitch, ref.q[3]);
    const Vector3d rate_ref(0.0, 0.0, ref.dq[3]);

    for (long i = 0; i < substeps; ++i) {
      const double ti = t + static_cast<double>(i) * opts.dt;
      Vector3d att_err = att_ref - s.attitude;
      att_err[2] = wrap_angle(att_err[2]);
      const Vector3d alpha = gains.attitude_kp.cwiseProduct(att_err) +
                             gains.attitude_kd.cwiseProduct(rate_ref - s.body_rates);
      Eigen::Vector4d u;
      u << sp.thrust, params.inertia_diag.cwiseProduct(alpha) +
                          s.body_rates.cross(params.inertia_diag.cwiseProduct(s.body_rates));
      const VectorXd forces = (pinv * u).cwiseMax(0.0).cwiseMin(params.f_max);

      // Servo: critically damped tracking of the reference extrapolated
      // within the sample, with velocity and acceleration feedforward.
      const double tau = static_cast<double>(i) * opts.dt;
      const JointVector q_ref = ref.q.tail(m) + tau * ref.dq.tail(m) + 0.5 * tau * tau * ref.ddq.tail(m);
      const JointVector dq_ref = ref.dq.tail(m) + tau * ref.ddq.tail(m);
      const JointVector joint_torques = ref.ddq.tail(m) + 2.0 * w * (dq_ref - s.joint_rates) +
                                        w * w * (q_ref - s.joints);

      disturbance.update();
      s = step_dynamics(s, forces, joint_torques, params, opts.dt, disturbance.current(), ti);
      s.joint_rates = s.joint_rates.cwiseMax(-gains.joint_rate_limit).cwiseMin(gains.joint_rate_limit);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Enrichment with simulated attitude

/// Full coordinates [x, y, z, roll, pitch, yaw, q_1..q_M] with rates and
/// accelerations.
struct FullTrajectoryPoint {
  double t = 0.0;
  VectorXd q;
  VectorXd dq;
  VectorXd ddq;
};

/// Finite-difference first and second derivatives of a uniformly sampled
/// signal: central in the interior, second-order one-sided at the ends.
inline std::pair<std::vector<double>, std::vector<double>> finite_difference(
    const std::vector<double>& y, double h) {
  const std::size_t n = y.size();
  std::vector<double> d1(n, 0.0), d2(n, 0.0);
  if (n < 2) return {d1, d2};
  if (n == 2) {
    d1[0] = d1[1] = (y[1] - y[0]) / h;
    return {d1, d2};
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    d1[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
    d2[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
  }
  d1[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
  d1[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
  if (n >= 4) {
    d2[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / (h * h);
    d2[n - 1] = (2.0 * y[n - 1] - 5.0 * y[n - 2] + 4.0 * y[n - 3] - y[n - 4]) / (h * h);
  } else {
    d2[0] = d2[n - 1] = d2[1];
  }
  return {d1, d2};
}

/// Copies every planned coordinate verbatim and fills the roll/pitch slots
/// with the simulated attitude and its finite-difference derivatives.
inline std::vector<FullTrajectoryPoint> enrich_trajectory(const SampledTrajectory& traj,
                                                          const std::vector<FullState>& sim) {
  if (traj.size() != sim.size()) {
    throw DimensionError("trajectory has " + std::to_string(traj.size()) + " samples, simulation " +
                         std::to_string(sim.size()));
  }
  const Eigen::Index m = traj.joint_count();
  std::vector<double> roll(sim.size()), pitch(sim.size());
  for (std::size_t k = 0; k < sim.size(); ++k) {
    roll[k] = sim[k].roll();
    pitch[k] = sim[k].pitch();
  }
  const auto [droll, ddroll] = finite_difference(roll, traj.sample_time);
  const auto [dpitch, ddpitch] = finite_difference(pitch, traj.sample_time);

  auto expand = [m](const VectorXd& ctrl, double r, double p) {
    VectorXd full(6 + m);
    full << ctrl.head<3>(), r, p, ctrl[3], ctrl.tail(m);
    return full;
  };
  std::vector<FullTrajectoryPoint> out(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& pt = traj.points[k];
    out[k].t = pt.t;
    out[k].q = expand(pt.q, roll[k], pitch[k]);
    out[k].dq = expand(pt.dq, droll[k], dpitch[k]);
    out[k].ddq = expand(pt.ddq, ddroll[k], ddpitch[k]);
  }
  return out;
}

}  // namespace amp
