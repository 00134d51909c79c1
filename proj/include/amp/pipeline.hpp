#pragma once

// Stage runner behind the command-line tool. Every stage reads its inputs
// from the output directory and writes its artifacts back there, so running
// the stages one per invocation gives the same bytes as one `all` run.

#include <filesystem>
#include <iostream>

#include <nlohmann/json.hpp>

#include "amp/artifacts.hpp"
#include "amp/scenario.hpp"

namespace amp {

enum class Stage { plan, parametrize, simulate, compensate, evaluate };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::plan: return "plan";
    case Stage::parametrize: return "parametrize";
    case Stage::simulate: return "simulate";
    case Stage::compensate: return "compensate";
    case Stage::evaluate: return "evaluate";
  }
  return "?";
}

inline constexpr Stage kAllStages[] = {Stage::plan, Stage::parametrize, Stage::simulate,
                                       Stage::compensate, Stage::evaluate};

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitScenario = 2,
  kExitPlanning = 3,
  kExitInfeasible = 4,
  kExitDivergence = 5,
};

/// Exit status for an exception escaping a stage.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ScenarioError*>(&e)) return kExitScenario;
  if (dynamic_cast<const PlanningTimeout*>(&e) || dynamic_cast<const InvalidWaypoint*>(&e)) {
    return kExitPlanning;
  }
  if (dynamic_cast<const InfeasibleParametrization*>(&e)) return kExitInfeasible;
  if (dynamic_cast<const StateDivergence*>(&e) || dynamic_cast<const FlatnessSingularity*>(&e)) {
    return kExitDivergence;
  }
  return kExitOther;
}

struct RunOptions {
  std::filesystem::path out_dir;
  bool compensation = true;
};

namespace artifact {
inline constexpr const char* path = "path.csv";
inline constexpr const char* trajectory = "trajectory.csv";
inline constexpr const char* sim_trace = "sim_trace.csv";
inline constexpr const char* compensated = "compensated.csv";
inline constexpr const char* residuals = "residuals.csv";
inline constexpr const char* sim_trace_compensated = "sim_trace_compensated.csv";
inline constexpr const char* errors = "errors.csv";
inline constexpr const char* report = "report.json";
}  // namespace artifact

struct ErrorStats {
  double peak_translation = 0.0;
  double rms_translation = 0.0;
  double peak_rotation = 0.0;
  double rms_rotation = 0.0;
  double peak_z = 0.0;
  double rms_z = 0.0;
};

inline ErrorStats error_stats(const std::vector<TrackingError>& trace) {
  ErrorStats s;
  if (trace.empty()) return s;
  for (const auto& e : trace) {
    s.peak_translation = std::max(s.peak_translation, e.translation);
    s.peak_rotation = std::max(s.peak_rotation, e.rotation);
    s.peak_z = std::max(s.peak_z, std::abs(e.z));
    s.rms_translation += e.translation * e.translation;
    s.rms_rotation += e.rotation * e.rotation;
    s.rms_z += e.z * e.z;
  }
  const double n = static_cast<double>(trace.size());
  s.rms_translation = std::sqrt(s.rms_translation / n);
  s.rms_rotation = std::sqrt(s.rms_rotation / n);
  s.rms_z = std::sqrt(s.rms_z / n);
  return s;
}

inline nlohmann::json to_json(const ErrorStats& s) {
  return {{"peak_translation", s.peak_translation}, {"rms_translation", s.rms_translation},
          {"peak_rotation", s.peak_rotation},       {"rms_rotation", s.rms_rotation},
          {"peak_z", s.peak_z},                     {"rms_z", s.rms_z}};
}

/// Largest distance of the end effector from the tube axis over the samples
/// where it lies between the tube entry and the tube end.
inline std::optional<double> tube_lateral_peak(const TubeTask& task,
                                               const std::vector<HomogeneousTransform>& ee) {
  std::optional<double> peak;
  for (const auto& pose : ee) {
    const Vector3d d = pose.translation() - task.entry;
    const double axial = d.dot(task.axis);
    if (axial < 0.0 || axial > task.length) continue;
    const double lateral = (d - axial * task.axis).norm();
    peak = std::max(peak.value_or(0.0), lateral);
  }
  return peak;
}

class Pipeline {
public:
  Pipeline(Scenario scenario, RunOptions opts) : sc_(std::move(scenario)), opts_(std::move(opts)) {
    sc_.simulation.disturbance.seed = sc_.disturbance_seed;
  }

  const Scenario& scenario() const { return sc_; }

  void run(Stage stage) {
    std::filesystem::create_directories(opts_.out_dir);
    switch (stage) {
      case Stage::plan: plan(); break;
      case Stage::parametrize: parametrize(); break;
      case Stage::simulate: simulate(); break;
      case Stage::compensate: compensate(); break;
      case Stage::evaluate: evaluate(); break;
    }
  }

  /// Every stage in order; a fresh report is started.
  void run_all() {
    std::filesystem::create_directories(opts_.out_dir);
    std::filesystem::remove(file(artifact::report));
    for (Stage s : kAllStages) run(s);
  }

private:
  std::string file(const char* name) const { return (opts_.out_dir / name).string(); }

  std::string require(const char* name, Stage stage) const {
    const std::string f = file(name);
    if (!std::filesystem::exists(f)) {
      throw Error(std::string("stage ") + stage_name(stage) + " needs " + f +
                  "; run the earlier stages first");
    }
    return f;
  }

  nlohmann::json load_report() const {
    const std::string f = file(artifact::report);
    if (!std::filesystem::exists(f)) return nlohmann::json::object();
    std::ifstream is(f, std::ios::binary);
    return nlohmann::json::parse(is);
  }

  void update_report(const char* section, nlohmann::json value) const {
    nlohmann::json r = load_report();
    r["scenario"] = sc_.name;
    r["schema_version"] = kScenarioSchemaVersion;
    r[section] = std::move(value);
    std::ofstream os(file(artifact::report), std::ios::binary);
    os << r.dump(2) << '\n';
  }

  SampledTrajectory load_trajectory(const char* name, Stage stage) const {
    auto traj = trajectory_from_table(read_csv(require(name, stage)), sc_.sample_time);
    require_dimension(traj.dimension(), 4 + sc_.joint_count(), name);
    return traj;
  }

  void plan() {
    const auto raw = plan_path(sc_.waypoints, sc_.obstacles, sc_.geometry, sc_.planner, sc_.planner_seed);
    // Indices of the user waypoints inside the planned path stay pinned.
    std::vector<std::size_t> keep;
    std::size_t w = 0;
    for (std::size_t i = 0; i < raw.size() && w < sc_.waypoints.size(); ++i) {
      if (raw[i] == sc_.waypoints[w]) {
        keep.push_back(i);
        ++w;
      }
    }
    const Path path = shortcut_path(raw, sc_.obstacles, sc_.geometry, sc_.planner,
                                    sc_.planner_seed + 1, sc_.shortcut_rounds, keep);
    write_csv(file(artifact::path), path_table(path));
    update_report("plan", {{"seed", sc_.planner_seed},
                           {"raw_points", raw.size()},
                           {"points", path.size()},
                           {"length", path_length(path, sc_.planner.metric)}});
  }

  void parametrize() {
    const Path path = path_from_table(read_csv(require(artifact::path, Stage::parametrize)));
    const auto r = amp::parametrize(path, sc_.limits, sc_.sample_time, sc_.topp);
    write_csv(file(artifact::trajectory), trajectory_table(r.trajectory));
    const auto feas = feasibility_check(r.trajectory, sc_.multirotor, sc_.feasibility);
    update_report("parametrize", {{"duration", r.profile.duration()},
                                  {"samples", r.trajectory.size()},
                                  {"grid_intervals", sc_.topp.grid_intervals},
                                  {"feasible", feas.feasible()},
                                  {"peak_tilt", feas.peak_tilt},
                                  {"peak_rotor_force", feas.peak_rotor_force},
                                  {"tilt_violations", feas.tilt_violations.size()},
                                  {"thrust_violations", feas.thrust_violations.size()},
                                  {"singular_samples", feas.singular_samples.size()}});
  }

  void simulate() {
    const auto traj = load_trajectory(artifact::trajectory, Stage::simulate);
    const auto sim = simulate_tracking(traj, sc_.multirotor, sc_.gains, sc_.simulation);
    write_csv(file(artifact::sim_trace), sim_trace_table(traj, sim));
    double peak_roll = 0.0, peak_pitch = 0.0, peak_pos = 0.0, rms_pos = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      peak_roll = std::max(peak_roll, std::abs(sim.states[k].roll()));
      peak_pitch = std::max(peak_pitch, std::abs(sim.states[k].pitch()));
      const double e = (sim.states[k].position - traj.points[k].q.head<3>()).norm();
      peak_pos = std::max(peak_pos, e);
      rms_pos += e * e;
    }
    rms_pos = traj.size() ? std::sqrt(rms_pos / static_cast<double>(traj.size())) : 0.0;
    update_report("simulate", {{"disturbance_seed", sc_.disturbance_seed},
                               {"dt", sc_.simulation.dt},
                               {"peak_roll", peak_roll},
                               {"peak_pitch", peak_pitch},
                               {"peak_position_error", peak_pos},
                               {"rms_position_error", rms_pos}});
  }

  void compensate() {
    if (!opts_.compensation) {
      for (const char* f : {artifact::compensated, artifact::residuals, artifact::sim_trace_compensated}) {
        std::filesystem::remove(file(f));
      }
      update_report("compensate", {{"enabled", false}});
      return;
    }
    const auto traj = load_trajectory(artifact::trajectory, Stage::compensate);
    const auto sim = sim_from_table(read_csv(require(artifact::sim_trace, Stage::compensate)));
    const auto enriched = enrich_trajectory(traj, sim.states);
    const auto r = amp::compensate(traj, enriched, sc_.geometry.body_to_arm, sc_.geometry.arm,
                                   sc_.compensation);
    write_csv(file(artifact::compensated), trajectory_table(r.compensated));
    write_csv(file(artifact::residuals), residuals_table(traj, r));

    // The compensated references are flown under the same disturbance realization.
    const auto sim_c = simulate_tracking(r.compensated, sc_.multirotor, sc_.gains, sc_.simulation);
    write_csv(file(artifact::sim_trace_compensated), sim_trace_table(r.compensated, sim_c));

    double max_t = 0.0, max_r = 0.0;
    for (const auto& res : r.residuals) {
      max_t = std::max(max_t, res.translation);
      max_r = std::max(max_r, res.rotation);
    }
    update_report("compensate", {{"enabled", true},
                                 {"unreachable_count", r.unreachable_count},
                                 {"joint_limit_clamped", r.joint_limit_clamped.size()},
                                 {"continuity_violations", r.continuity_violations.size()},
                                 {"velocity_limit_flags", r.velocity_limit_flags.size()},
                                 {"acceleration_limit_flags", r.acceleration_limit_flags.size()},
                                 {"limit_audit_passed", r.limit_audit_passed()},
                                 {"max_residual_translation", max_t},
                                 {"max_residual_rotation", max_r}});
  }

  void evaluate() {
    const auto traj = load_trajectory(artifact::trajectory, Stage::evaluate);
    const auto sim = sim_from_table(read_csv(require(artifact::sim_trace, Stage::evaluate)));
    const auto& arm = sc_.geometry.arm;
    const auto& b2a = sc_.geometry.body_to_arm;
    const auto desired = desired_ee_poses(traj, b2a, arm);
    const auto nc = evaluate_tracking(desired, sim.times, sim.states, b2a, arm);

    std::optional<std::vector<TrackingError>> comp;
    std::optional<SimulationResult> sim_c;
    if (opts_.compensation && std::filesystem::exists(file(artifact::sim_trace_compensated))) {
      sim_c = sim_from_table(read_csv(file(artifact::sim_trace_compensated)));
      comp = evaluate_tracking(desired, sim_c->times, sim_c->states, b2a, arm);
    }
    const auto& executed = comp ? *comp : nc;
    write_csv(file(artifact::errors), errors_table(executed, nc, comp ? &*comp : nullptr));

    const auto s_nc = error_stats(nc);
    nlohmann::json rep{{"uncompensated", to_json(s_nc)}, {"compensated", nullptr}};
    if (comp) {
      const auto s_c = error_stats(*comp);
      rep["compensated"] = to_json(s_c);
      rep["z_peak_ratio"] = s_nc.peak_z > 0.0 ? s_c.peak_z / s_nc.peak_z : 0.0;
    }
    if (sc_.task) {
      auto executed_ee = [&](const SimulationResult& s) {
        std::vector<HomogeneousTransform> out;
        for (const auto& st : s.states) out.push_back(chain_world_to_ee(st.world_to_body(), b2a, arm, st.joints));
        return out;
      };
      auto lateral_json = [&](const std::vector<HomogeneousTransform>& ee) -> nlohmann::json {
        const auto peak = tube_lateral_peak(*sc_.task, ee);
        if (!peak) return {{"entered", false}};
        return {{"entered", true},
                {"peak_lateral_offset", *peak},
                {"inside_tube", *peak < sc_.task->diameter / 2.0}};
      };
      nlohmann::json task{{"tube_diameter", sc_.task->diameter},
                          {"planned", lateral_json(desired)},
                          {"uncompensated", lateral_json(executed_ee(sim))}};
      if (sim_c) task["compensated"] = lateral_json(executed_ee(*sim_c));
      rep["task"] = std::move(task);
    }
    update_report("evaluate", std::move(rep));
  }

  Scenario sc_;
  RunOptions opts_;
};

// ---------------------------------------------------------------------------
// Run comparison

struct RunComparison {
  CsvTable deltas;  // t, d_translation, d_rotation, d_z (candidate minus baseline)
  nlohmann::json summary;
};

namespace detail {

/// The z error a run actually flew: compensated when present, otherwise the
/// uncompensated column.
inline std::vector<TrackingError> executed_trace(const CsvTable& t) {
  const auto ct = t.column("t"), ctr = t.column("translation_err"), cro = t.column("rotation_err");
  const auto cnc = t.column("z_err_uncompensated"), cc = t.column("z_err_compensated");
  std::vector<TrackingError> out;
  for (const auto& row : t.rows) {
    const double z = std::isnan(row[cc]) ? row[cnc] : row[cc];
    out.push_back({row[ct], row[ctr], row[cro], z});
  }
  return out;
}

}  // namespace detail

/// Aligns two runs' errors.csv sample by sample. Reduction figures are
/// baseline minus candidate, so a positive value means the candidate is better.
inline RunComparison compare_runs(const std::filesystem::path& baseline,
                                  const std::filesystem::path& candidate) {
  auto load = [](const std::filesystem::path& dir) {
    const auto f = dir / artifact::errors;
    if (!std::filesystem::exists(f)) throw Error(f.string() + ": missing errors trace");
    auto t = read_csv(f.string());
    if (t.header != error_columns()) throw Error(f.string() + ": unexpected errors.csv schema");
    return t;
  };
  const auto ta = load(baseline), tb = load(candidate);
  if (ta.rows.size() != tb.rows.size()) {
    throw Error("runs differ in sample count (" + std::to_string(ta.rows.size()) + " vs " +
                std::to_string(tb.rows.size()) + ")");
  }
  const auto a = detail::executed_trace(ta), b = detail::executed_trace(tb);
  RunComparison out;
  out.deltas.header = {"t", "d_translation", "d_rotation", "d_z"};
  double peak_dt = 0.0, peak_dr = 0.0, peak_dz = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].t != b[k].t) throw Error("runs differ in sample times at row " + std::to_string(k));
    const double dt = b[k].translation - a[k].translation;
    const double dr = b[k].rotation - a[k].rotation;
    const double dz = b[k].z - a[k].z;
    out.deltas.rows.push_back({a[k].t, dt, dr, dz});
    peak_dt = std::max(peak_dt, std::abs(dt));
    peak_dr = std::max(peak_dr, std::abs(dr));
    peak_dz = std::max(peak_dz, std::abs(dz));
  }
  const auto sa = error_stats(a), sb = error_stats(b);
  out.summary = {{"baseline", to_json(sa)},
                 {"candidate", to_json(sb)},
                 {"samples", a.size()},
                 {"peak_abs_delta", {{"translation", peak_dt}, {"rotation", peak_dr}, {"z", peak_dz}}},
                 {"peak_z_reduction", sa.peak_z - sb.peak_z},
                 {"rms_z_reduction", sa.rms_z - sb.rms_z},
                 {"peak_translation_reduction", sa.peak_translation - sb.peak_translation}};
  return out;
}

}  // namespace amp
