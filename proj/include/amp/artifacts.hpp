#pragma once

// Conversions between pipeline data and CSV tables.
//
//   path.csv        x,y,z,psi,q1..qM
//   trajectory.csv  t, x,y,z,psi,q1..qM, dx..dqM, ddx..ddqM
//   sim_trace.csv   t, x_ref,y_ref,z_ref,psi_ref,q1_ref..qM_ref,
//                   x,y,z,roll,pitch,yaw,q1..qM
//   errors.csv      t, translation_err, rotation_err, z_err_uncompensated, z_err_compensated
//   residuals.csv   t, weighted, translation, rotation

#include "amp/compensation.hpp"
#include "amp/control_space.hpp"
#include "amp/csv.hpp"
#include "amp/dynamics.hpp"
#include "amp/topp_ra.hpp"

namespace amp {

inline std::vector<std::string> control_space_columns(Eigen::Index joints,
                                                      const std::string& prefix = "",
                                                      const std::string& suffix = "") {
  std::vector<std::string> out;
  for (const char* c : {"x", "y", "z", "psi"}) out.push_back(prefix + c + suffix);
  for (Eigen::Index j = 1; j <= joints; ++j) out.push_back(prefix + "q" + std::to_string(j) + suffix);
  return out;
}

namespace detail {

inline Eigen::Index joints_from_width(std::size_t width, std::size_t fixed, std::size_t per_joint,
                                      const char* what) {
  if (width < fixed || (width - fixed) % per_joint != 0) {
    throw CsvError(std::string(what) + ": unexpected column count " + std::to_string(width));
  }
  return static_cast<Eigen::Index>((width - fixed) / per_joint);
}

inline void require_header(const CsvTable& t, const std::vector<std::string>& expected,
                           const char* what) {
  if (t.header != expected) throw CsvError(std::string(what) + ": unexpected header");
}

}  // namespace detail

inline CsvTable path_table(const Path& path) {
  CsvTable t;
  const Eigen::Index m = path.empty() ? 0 : path.front().joint_count();
  t.header = control_space_columns(m);
  for (const auto& p : path) {
    const auto& c = p.coords();
    t.rows.emplace_back(c.data(), c.data() + c.size());
  }
  return t;
}

inline Path path_from_table(const CsvTable& t) {
  const Eigen::Index m = detail::joints_from_width(t.header.size(), 4, 1, "path");
  detail::require_header(t, control_space_columns(m), "path");
  Path out;
  for (const auto& row : t.rows) {
    out.emplace_back(Eigen::Map<const VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
  }
  return out;
}

inline std::vector<std::string> trajectory_columns(Eigen::Index joints) {
  std::vector<std::string> h{"t"};
  for (const char* prefix : {"", "d", "dd"}) {
    for (auto& c : control_space_columns(joints, prefix)) h.push_back(std::move(c));
  }
  return h;
}

inline CsvTable trajectory_table(const SampledTrajectory& traj) {
  CsvTable t;
  const Eigen::Index n = traj.dimension();
  t.header = trajectory_columns(traj.joint_count());
  for (const auto& pt : traj.points) {
    std::vector<double> row{pt.t};
    for (const VectorXd* v : {&pt.q, &pt.dq, &pt.ddq}) row.insert(row.end(), v->data(), v->data() + n);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline SampledTrajectory trajectory_from_table(const CsvTable& t, double sample_time) {
  const Eigen::Index m = detail::joints_from_width(t.header.size(), 13, 3, "trajectory");
  detail::require_header(t, trajectory_columns(m), "trajectory");
  const Eigen::Index n = 4 + m;
  SampledTrajectory traj;
  traj.sample_time = sample_time;
  for (const auto& row : t.rows) {
    ControlTrajectoryPoint pt;
    pt.t = row[0];
    pt.q = Eigen::Map<const VectorXd>(row.data() + 1, n);
    pt.dq = Eigen::Map<const VectorXd>(row.data() + 1 + n, n);
    pt.ddq = Eigen::Map<const VectorXd>(row.data() + 1 + 2 * n, n);
    traj.points.push_back(std::move(pt));
  }
  return traj;
}

inline std::vector<std::string> sim_trace_columns(Eigen::Index joints) {
  std::vector<std::string> h{"t"};
  for (auto& c : control_space_columns(joints, "", "_ref")) h.push_back(std::move(c));
  for (const char* c : {"x", "y", "z", "roll", "pitch", "yaw"}) h.emplace_back(c);
  for (Eigen::Index j = 1; j <= joints; ++j) h.push_back("q" + std::to_string(j));
  return h;
}

inline CsvTable sim_trace_table(const SampledTrajectory& traj, const SimulationResult& sim) {
  if (traj.size() != sim.states.size()) throw DimensionError("trajectory and simulation differ in length");
  CsvTable t;
  const Eigen::Index m = traj.joint_count();
  t.header = sim_trace_columns(m);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& ref = traj.points[k].q;
    const auto& s = sim.states[k];
    std::vector<double> row{sim.times[k]};
    row.insert(row.end(), ref.data(), ref.data() + ref.size());
    row.insert(row.end(), s.position.data(), s.position.data() + 3);
    row.insert(row.end(), s.attitude.data(), s.attitude.data() + 3);
    row.insert(row.end(), s.joints.data(), s.joints.data() + m);
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Executed states recovered from a trace. Only pose and joint positions are
/// stored; rates are left at zero.
inline SimulationResult sim_from_table(const CsvTable& t) {
  const Eigen::Index m = detail::joints_from_width(t.header.size(), 11, 2, "sim trace");
  detail::require_header(t, sim_trace_columns(m), "sim trace");
  SimulationResult sim;
  for (const auto& row : t.rows) {
    const double* s = row.data() + 5 + m;
    FullState st;
    st.position = Vector3d(s[0], s[1], s[2]);
    st.attitude = Vector3d(s[3], s[4], s[5]);
    st.joints = Eigen::Map<const VectorXd>(s + 6, m);
    st.joint_rates = JointVector::Zero(m);
    sim.times.push_back(row[0]);
    sim.states.push_back(std::move(st));
  }
  return sim;
}

inline const std::vector<std::string>& error_columns() {
  static const std::vector<std::string> h{"t", "translation_err", "rotation_err",
                                          "z_err_uncompensated", "z_err_compensated"};
  return h;
}

/// `executed` supplies the translation/rotation columns; a missing compensated
/// trace is written as nan.
inline CsvTable errors_table(const std::vector<TrackingError>& executed,
                             const std::vector<TrackingError>& uncompensated,
                             const std::vector<TrackingError>* compensated) {
  if (uncompensated.size() != executed.size() ||
      (compensated && compensated->size() != executed.size())) {
    throw DimensionError("error traces differ in length");
  }
  CsvTable t;
  t.header = error_columns();
  for (std::size_t k = 0; k < executed.size(); ++k) {
    t.rows.push_back({executed[k].t, executed[k].translation, executed[k].rotation,
                      uncompensated[k].z,
                      compensated ? (*compensated)[k].z : std::numeric_limits<double>::quiet_NaN()});
  }
  return t;
}

inline CsvTable residuals_table(const SampledTrajectory& traj, const CompensationResult& r) {
  CsvTable t;
  t.header = {"t", "weighted", "translation", "rotation"};
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& res = r.residuals[k];
    t.rows.push_back({traj.points[k].t, res.weighted, res.translation, res.rotation});
  }
  return t;
}

}  // namespace amp
