#pragma once

// Scenario files: one JSON document holding every input of a pipeline run.
// Numbers are SI, angles radians. Unknown fields are rejected and every
// error names the offending field path.

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "amp/compensation.hpp"
#include "amp/dynamics.hpp"
#include "amp/path_planner.hpp"
#include "amp/topp_ra.hpp"

namespace amp {

inline constexpr int kScenarioSchemaVersion = 1;

/// Peg-in-hole target: a tube whose entry is at `entry`, running along `axis`.
struct TubeTask {
  Vector3d entry = Vector3d::Zero();
  Vector3d axis = Vector3d::UnitX();
  double diameter = 0.07;
  double length = 0.1;
};

struct Scenario {
  std::string name;
  std::string description;
  double sample_time = 0.01;
  std::vector<ControlSpacePoint> waypoints;
  ObstacleSet obstacles;
  RobotGeometry geometry;
  JointLimits joint_limits;
  KinodynamicLimits limits;
  MultirotorParams multirotor;
  ControllerGains gains;
  FeasibilityLimits feasibility;
  RRTStarParams planner;
  int shortcut_rounds = 200;
  ToppOptions topp;
  SimulationOptions simulation;
  CompensationOptions compensation;
  std::uint64_t planner_seed = 1;
  std::uint64_t disturbance_seed = 1;
  std::string output_directory;
  std::optional<TubeTask> task;
  std::vector<std::string> warnings;

  Eigen::Index joint_count() const { return static_cast<Eigen::Index>(geometry.arm.actuated_count()); }
};

namespace detail {

using nlohmann::json;

/// Typed access to one JSON object that remembers which keys were read so
/// leftover keys can be rejected.
class FieldReader {
public:
  FieldReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ScenarioError((path.empty() ? std::string("<root>") : path) + ": " + what);
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& get(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(child(key), "required field missing");
    return j_.at(key);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  double number(const std::string& key) { return as_number(get(key), child(key)); }
  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    return v ? as_number(*v, child(key)) : fallback;
  }
  double positive(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v > 0.0)) fail(child(key), "must be positive");
    return v;
  }
  double positive(const std::string& key) {
    const double v = number(key);
    if (!(v > 0.0)) fail(child(key), "must be positive");
    return v;
  }
  double non_negative(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v >= 0.0)) fail(child(key), "must be non-negative");
    return v;
  }
  long integer(const std::string& key, long fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(child(key), "expected an integer");
    return v->get<long>();
  }
  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) fail(child(key), "expected a non-negative integer");
    return v->get<std::uint64_t>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(child(key), "expected a string");
    return v->get<std::string>();
  }
  VectorXd vector(const std::string& key, Eigen::Index size = -1) {
    return as_vector(get(key), child(key), size);
  }
  VectorXd vector(const std::string& key, const VectorXd& fallback) {
    const json* v = find(key);
    return v ? as_vector(*v, child(key), fallback.size()) : fallback;
  }
  Vector3d vec3(const std::string& key) { return vector(key, 3); }
  Vector3d vec3(const std::string& key, const Vector3d& fallback) {
    return vector(key, VectorXd(fallback));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(child(it.key()), "unknown field");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  static VectorXd as_vector(const json& v, const std::string& path, Eigen::Index size) {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    if (size >= 0 && static_cast<Eigen::Index>(v.size()) != size) {
      fail(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
    }
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      out[static_cast<Eigen::Index>(i)] = as_number(v[i], path + "[" + std::to_string(i) + "]");
    }
    return out;
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline const json& array_field(FieldReader& r, const std::string& key) {
  const json& v = r.get(key);
  if (!v.is_array()) FieldReader::fail(r.child(key), "expected an array");
  return v;
}

inline HomogeneousTransform read_transform(const json& j, const std::string& path) {
  FieldReader r(j, path);
  const Vector3d t = r.vec3("translation", Vector3d::Zero());
  const Vector3d rpy = r.vec3("rpy", Vector3d::Zero());
  r.finish();
  return HomogeneousTransform::from_pose(t, rpy[0], rpy[1], rpy[2]);
}

inline DHTable read_dh(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) FieldReader::fail(path, "expected a non-empty array of rows");
  std::vector<DHRow> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    FieldReader r(j[i], path + "[" + std::to_string(i) + "]");
    DHRow row;
    row.theta_offset = r.number("theta");
    row.d = r.number("d");
    row.alpha = r.number("alpha");
    row.a = r.number("a");
    const std::string kind = r.string("joint", "revolute");
    if (kind == "revolute") {
      row.kind = JointKind::rotational;
    } else if (kind == "prismatic") {
      row.kind = JointKind::prismatic;
    } else if (kind == "fixed") {
      row.kind = JointKind::fixed;
    } else {
      FieldReader::fail(r.child("joint"), "expected revolute, prismatic or fixed, got '" + kind + "'");
    }
    r.finish();
    rows.push_back(row);
  }
  return DHTable(std::move(rows));
}

inline void read_obstacles(const json& j, const std::string& path, ObstacleSet& obs) {
  FieldReader r(j, path);
  if (const json* boxes = r.find("boxes")) {
    if (!boxes->is_array()) FieldReader::fail(r.child("boxes"), "expected an array");
    for (std::size_t i = 0; i < boxes->size(); ++i) {
      const std::string p = r.child("boxes") + "[" + std::to_string(i) + "]";
      FieldReader b((*boxes)[i], p);
      Box box{b.vec3("min"), b.vec3("max")};
      b.finish();
      if ((box.min.array() > box.max.array()).any()) FieldReader::fail(p, "min exceeds max");
      obs.boxes.push_back(box);
    }
  }
  if (const json* cyls = r.find("cylinders")) {
    if (!cyls->is_array()) FieldReader::fail(r.child("cylinders"), "expected an array");
    for (std::size_t i = 0; i < cyls->size(); ++i) {
      const std::string p = r.child("cylinders") + "[" + std::to_string(i) + "]";
      FieldReader c((*cyls)[i], p);
      Cylinder cyl;
      cyl.center = c.vector("center", 2);
      cyl.radius = c.positive("radius");
      cyl.z_min = c.number("z_min");
      cyl.z_max = c.number("z_max");
      c.finish();
      if (cyl.z_min > cyl.z_max) FieldReader::fail(p, "z_min exceeds z_max");
      obs.cylinders.push_back(cyl);
    }
  }
  obs.inflation = r.non_negative("inflation", 0.0);
  r.finish();
}

inline void read_multirotor(const json& j, const std::string& path, MultirotorParams& mr) {
  FieldReader r(j, path);
  mr.mass = r.positive("mass");
  mr.inertia_diag = r.vec3("inertia");
  if ((mr.inertia_diag.array() <= 0.0).any()) FieldReader::fail(r.child("inertia"), "must be positive");
  mr.f_max = r.positive("f_max");
  mr.gravity = r.positive("gravity", kStandardGravity);
  mr.workspace_radius = r.positive("workspace_radius", mr.workspace_radius);
  if (const json* m = r.find("mixing")) {
    if (r.has("rotors") || r.has("arm_length") || r.has("drag_coefficient")) {
      FieldReader::fail(r.child("mixing"), "give either an explicit mixing matrix or a symmetric layout");
    }
    if (!m->is_array() || m->size() != 4) FieldReader::fail(r.child("mixing"), "expected 4 rows");
    const auto cols = static_cast<Eigen::Index>((*m)[0].is_array() ? (*m)[0].size() : 0);
    mr.mixing.resize(4, cols);
    for (std::size_t i = 0; i < 4; ++i) {
      mr.mixing.row(static_cast<Eigen::Index>(i)) = FieldReader::as_vector(
          (*m)[i], r.child("mixing") + "[" + std::to_string(i) + "]", cols);
    }
  } else {
    const long rotors = r.integer("rotors", 6);
    if (rotors < 4) FieldReader::fail(r.child("rotors"), "need at least 4 rotors");
    mr.mixing = symmetric_mixing(static_cast<int>(rotors), r.positive("arm_length", 0.215),
                                 r.non_negative("drag_coefficient", 0.016));
  }
  r.finish();
  try {
    mr.validate();
  } catch (const Error& e) {
    FieldReader::fail(path, e.what());
  }
}

inline void read_gains(const json& j, const std::string& path, ControllerGains& g) {
  FieldReader r(j, path);
  g.position_kp = r.vec3("position_kp", g.position_kp);
  g.position_ki = r.vec3("position_ki", g.position_ki);
  g.position_kd = r.vec3("position_kd", g.position_kd);
  g.integral_limit = r.non_negative("integral_limit", g.integral_limit);
  g.max_tilt = r.positive("max_tilt", g.max_tilt);
  g.attitude_kp = r.vec3("attitude_kp", g.attitude_kp);
  g.attitude_kd = r.vec3("attitude_kd", g.attitude_kd);
  g.joint_bandwidth = r.positive("joint_bandwidth", g.joint_bandwidth);
  g.joint_rate_limit = r.positive("joint_rate_limit", g.joint_rate_limit);
  r.finish();
}

inline void read_planner(const json& j, const std::string& path, Scenario& s) {
  FieldReader r(j, path);
  auto& p = s.planner;
  p.steer_step = r.positive("steer_step", p.steer_step);
  p.goal_bias = r.number("goal_bias", p.goal_bias);
  if (p.goal_bias < 0.0 || p.goal_bias > 1.0) FieldReader::fail(r.child("goal_bias"), "must lie in [0, 1]");
  p.gamma = r.positive("gamma", p.gamma);
  p.max_iterations = static_cast<int>(r.integer("max_iterations", p.max_iterations));
  if (p.max_iterations < 1) FieldReader::fail(r.child("max_iterations"), "must be at least 1");
  p.resolution = r.positive("resolution", p.resolution);
  p.clearance_margin = r.non_negative("clearance_margin", p.resolution / 2.0);
  s.shortcut_rounds = static_cast<int>(r.integer("shortcut_rounds", s.shortcut_rounds));
  if (const json* m = r.find("metric")) {
    FieldReader mr(*m, r.child("metric"));
    p.metric.position_weight = mr.positive("position", p.metric.position_weight);
    p.metric.yaw_weight = mr.positive("yaw", p.metric.yaw_weight);
    p.metric.joint_weight = mr.positive("joints", p.metric.joint_weight);
    mr.finish();
  }
  if (const json* b = r.find("bounds")) {
    FieldReader br(*b, r.child("bounds"));
    p.bounds.position_min = br.vec3("position_min", p.bounds.position_min);
    p.bounds.position_max = br.vec3("position_max", p.bounds.position_max);
    const Eigen::Index m = s.joint_count();
    if (br.has("joint_lower") || br.has("joint_upper")) {
      p.bounds.joints.lower = br.vector("joint_lower", m);
      p.bounds.joints.upper = br.vector("joint_upper", m);
    }
    br.finish();
    if ((p.bounds.position_min.array() >= p.bounds.position_max.array()).any()) {
      FieldReader::fail(r.child("bounds"), "position_min must be below position_max");
    }
  }
  r.finish();
}

inline void read_ik(const json& j, const std::string& path, IKOptions& ik) {
  FieldReader r(j, path);
  ik.damping = r.positive("damping", ik.damping);
  ik.max_iterations = static_cast<int>(r.integer("max_iterations", ik.max_iterations));
  ik.tolerance = r.positive("tolerance", ik.tolerance);
  ik.position_weight = r.positive("position_weight", ik.position_weight);
  ik.rotation_weight = r.non_negative("rotation_weight", ik.rotation_weight);
  ik.accept_tol = r.positive("accept_tol", ik.accept_tol);
  r.finish();
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col > 1 ? col - 1 : col};
}

}  // namespace detail

/// Parses and validates a scenario document. `source` names it in errors.
inline Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>") {
  using detail::FieldReader;
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte);
    throw ScenarioError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                        ": JSON parse error: " + e.what());
  }

  Scenario s;
  FieldReader root(doc, "");
  {
    const json& v = root.get("schema_version");
    if (!v.is_number_integer()) FieldReader::fail("schema_version", "expected an integer");
    if (v.get<long>() != kScenarioSchemaVersion) {
      FieldReader::fail("schema_version", "unsupported version " + v.dump() + ", expected " +
                                              std::to_string(kScenarioSchemaVersion));
    }
  }
  s.name = root.string("name", "scenario");
  s.description = root.string("description", "");
  s.output_directory = root.string("output_directory", "");
  s.sample_time = root.positive("sample_time", s.sample_time);

  // Arm first: it fixes the control-space dimension.
  {
    FieldReader arm(root.get("arm"), "arm");
    s.geometry.arm = detail::read_dh(arm.get("dh"), "arm.dh");
    s.geometry.body_to_arm = detail::read_transform(arm.get("base"), "arm.base");
    s.geometry.link_radius = arm.positive("link_radius", s.geometry.link_radius);
    const Eigen::Index m = s.joint_count();
    if (m == 0) FieldReader::fail("arm.dh", "arm needs at least one actuated joint");
    s.joint_limits.lower = VectorXd::Constant(m, -kPi);
    s.joint_limits.upper = VectorXd::Constant(m, kPi);
    if (const json* lim = arm.find("joint_limits")) {
      FieldReader lr(*lim, "arm.joint_limits");
      s.joint_limits.lower = lr.vector("lower", m);
      s.joint_limits.upper = lr.vector("upper", m);
      lr.finish();
      if ((s.joint_limits.lower.array() > s.joint_limits.upper.array()).any()) {
        FieldReader::fail("arm.joint_limits", "lower exceeds upper");
      }
    }
    arm.finish();
  }
  const Eigen::Index m = s.joint_count();
  const Eigen::Index dim = 4 + m;

  {
    const json& wps = detail::array_field(root, "waypoints");
    if (wps.size() < 2) FieldReader::fail("waypoints", "need at least two waypoints");
    for (std::size_t i = 0; i < wps.size(); ++i) {
      const std::string p = "waypoints[" + std::to_string(i) + "]";
      if (!wps[i].is_array()) FieldReader::fail(p, "expected an array of numbers");
      if (static_cast<Eigen::Index>(wps[i].size()) != dim) {
        throw ScenarioError(p + ": waypoint " + std::to_string(i) + " has dimension " +
                            std::to_string(wps[i].size()) + ", expected " + std::to_string(dim) +
                            " (x, y, z, psi and " + std::to_string(m) + " joints)");
      }
      s.waypoints.emplace_back(FieldReader::as_vector(wps[i], p, dim));
    }
  }

  if (const json* obs = root.find("obstacles")) detail::read_obstacles(*obs, "obstacles", s.obstacles);

  if (const json* robot = root.find("robot")) {
    FieldReader r(*robot, "robot");
    s.geometry.body_radius = r.positive("body_radius", s.geometry.body_radius);
    r.finish();
  }

  {
    FieldReader lim(root.get("limits"), "limits");
    s.limits.v_max = lim.vector("v_max", dim);
    s.limits.a_max = lim.vector("a_max", dim);
    if ((s.limits.v_max.array() <= 0.0).any()) FieldReader::fail("limits.v_max", "must be positive");
    if ((s.limits.a_max.array() <= 0.0).any()) FieldReader::fail("limits.a_max", "must be positive");
    lim.finish();
  }

  detail::read_multirotor(root.get("multirotor"), "multirotor", s.multirotor);
  if (const json* g = root.find("controller")) detail::read_gains(*g, "controller", s.gains);

  s.planner.bounds.joints = s.joint_limits;
  if (const json* p = root.find("planner")) detail::read_planner(*p, "planner", s);

  if (const json* p = root.find("parametrization")) {
    FieldReader r(*p, "parametrization");
    s.topp.grid_intervals = static_cast<int>(r.integer("grid_intervals", s.topp.grid_intervals));
    if (s.topp.grid_intervals < 1) FieldReader::fail("parametrization.grid_intervals", "must be at least 1");
    s.feasibility.max_tilt = r.positive("max_tilt", s.feasibility.max_tilt);
    r.finish();
  }

  if (const json* p = root.find("simulation")) {
    FieldReader r(*p, "simulation");
    s.simulation.dt = r.positive("dt", s.simulation.dt);
    if (const json* d = r.find("disturbance")) {
      FieldReader dr(*d, "simulation.disturbance");
      auto& dm = s.simulation.disturbance;
      dm.force_bound = dr.non_negative("force_bound", dm.force_bound);
      dm.torque_bound = dr.non_negative("torque_bound", dm.torque_bound);
      dm.step_fraction = dr.non_negative("step_fraction", dm.step_fraction);
      dr.finish();
    }
    r.finish();
  }
  if (s.simulation.dt > 0.02) FieldReader::fail("simulation.dt", "must not exceed 0.02 s");
  {
    const double ratio = s.sample_time / s.simulation.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
      FieldReader::fail("simulation.dt", "must divide sample_time");
    }
  }

  s.compensation.joint_limits = s.joint_limits;
  s.compensation.limits = s.limits;
  if (const json* c = root.find("compensation")) {
    FieldReader r(*c, "compensation");
    if (const json* ik = r.find("ik")) detail::read_ik(*ik, "compensation.ik", s.compensation.ik);
    s.compensation.audit_slack = r.non_negative("audit_slack", s.compensation.audit_slack);
    s.compensation.continuity_factor = r.positive("continuity_factor", s.compensation.continuity_factor);
    r.finish();
  }

  if (const json* seeds = root.find("seeds")) {
    FieldReader r(*seeds, "seeds");
    s.planner_seed = r.seed("planner", s.planner_seed);
    s.disturbance_seed = r.seed("disturbance", s.disturbance_seed);
    r.finish();
  }

  if (const json* t = root.find("task")) {
    FieldReader r(*t, "task");
    TubeTask task;
    task.entry = r.vec3("tube_entry");
    task.axis = r.vec3("tube_axis", task.axis);
    if (!(task.axis.norm() > 0.0)) FieldReader::fail("task.tube_axis", "must be non-zero");
    task.axis.normalize();
    task.diameter = r.positive("tube_diameter", task.diameter);
    task.length = r.positive("tube_length", task.length);
    r.finish();
    s.task = task;
  }
  root.finish();

  // Soft checks.
  for (std::size_t i = 0; i < s.waypoints.size(); ++i) {
    const auto& w = s.waypoints[i];
    if (!s.joint_limits.contains(w.joints())) {
      s.warnings.push_back("waypoints[" + std::to_string(i) + "]: joints outside arm.joint_limits");
    }
    if ((w.position().array() < s.planner.bounds.position_min.array()).any() ||
        (w.position().array() > s.planner.bounds.position_max.array()).any()) {
      s.warnings.push_back("waypoints[" + std::to_string(i) + "]: position outside planner bounds");
    }
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ScenarioError(path + ": cannot open scenario file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str(), path);
}

}  // namespace amp
