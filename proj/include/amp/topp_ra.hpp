#pragma once

// Time-optimal path parametrization by reachability analysis for per-coordinate
// velocity and acceleration limits.
//
// With x = sdot^2 and u = sddot, coordinate i obeys
//   |P'_i(s)| * sqrt(x) <= v_i           -> x <= (v_i / |P'_i|)^2
//   |P'_i(s) u + P''_i(s) x| <= a_i      -> affine bounds on u in terms of x
// and consecutive grid stages are linked by x_{k+1} = x_k + 2 (s_{k+1} - s_k) u_k.
// Every stage constraint is a half-plane in (x, u), so the one-step
// backward-reachable set is an interval obtainable in closed form.

#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "amp/spline.hpp"

namespace amp {

struct KinodynamicLimits {
  VectorXd v_max;
  VectorXd a_max;

  void validate(Eigen::Index dim) const {
    require_dimension(v_max.size(), dim, "velocity limits");
    require_dimension(a_max.size(), dim, "acceleration limits");
    if ((v_max.array() <= 0.0).any() || (a_max.array() <= 0.0).any()) {
      throw Error("kinodynamic limits must be strictly positive");
    }
  }
};

/// u >= slope * x + offset (lower) or u <= slope * x + offset (upper).
struct AffineBound {
  double slope = 0.0;
  double offset = 0.0;
  double at(double x) const { return slope * x + offset; }
};

struct StageConstraints {
  double x_max = std::numeric_limits<double>::infinity();
  std::vector<AffineBound> lower;
  std::vector<AffineBound> upper;

  double u_min(double x) const {
    double u = -std::numeric_limits<double>::infinity();
    for (const auto& b : lower) u = std::max(u, b.at(x));
    return u;
  }
  double u_max(double x) const {
    double u = std::numeric_limits<double>::infinity();
    for (const auto& b : upper) u = std::min(u, b.at(x));
    return u;
  }
};

inline constexpr double kNegligibleTangent = 1e-12;

/// Any twice-differentiable curve P(s) over [s_begin, s_end].
template <class C>
concept ParametricCurve = requires(const C& c, double s) {
  { c.first_derivative(s) } -> std::convertible_to<VectorXd>;
  { c.second_derivative(s) } -> std::convertible_to<VectorXd>;
  { c.dimension() } -> std::convertible_to<Eigen::Index>;
};

/// Bounds on x = sdot^2 and on u = sddot at path parameter s.
template <ParametricCurve Curve>
StageConstraints second_order_bounds(const Curve& path, const KinodynamicLimits& limits, double s) {
  const VectorXd dp = path.first_derivative(s);
  const VectorXd ddp = path.second_derivative(s);
  StageConstraints c;
  for (Eigen::Index i = 0; i < dp.size(); ++i) {
    const double v = limits.v_max[i];
    const double a = limits.a_max[i];
    if (std::abs(dp[i]) < kNegligibleTangent) {
      // Only the curvature term remains: |P''_i| x <= a_i.
      if (std::abs(ddp[i]) > kNegligibleTangent) c.x_max = std::min(c.x_max, a / std::abs(ddp[i]));
      continue;
    }
    c.x_max = std::min(c.x_max, (v / dp[i]) * (v / dp[i]));
    const AffineBound lo{-ddp[i] / dp[i], -a / dp[i]};
    const AffineBound hi{-ddp[i] / dp[i], a / dp[i]};
    if (dp[i] > 0.0) {
      c.lower.push_back(lo);
      c.upper.push_back(hi);
    } else {
      c.lower.push_back(hi);
      c.upper.push_back(lo);
    }
  }
  return c;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty() const { return lo > hi; }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
};

namespace detail {

inline constexpr double kSetTolerance = 1e-10;

/// {x in [0, x_max] : exists u with max(lower(x)) <= u <= min(upper(x))}.
inline Interval feasible_x(const StageConstraints& c) {
  Interval out{0.0, c.x_max};
  for (const auto& l : c.lower) {
    for (const auto& u : c.upper) {
      // l.slope x + l.offset <= u.slope x + u.offset
      const double k = l.slope - u.slope;
      const double r = u.offset - l.offset;
      if (std::abs(k) < 1e-300) {
        if (r < -kSetTolerance * (1.0 + std::abs(u.offset) + std::abs(l.offset))) {
          return {1.0, 0.0};
        }
      } else if (k > 0.0) {
        out.hi = std::min(out.hi, r / k);
      } else {
        out.lo = std::max(out.lo, r / k);
      }
    }
  }
  return out;
}

/// Adds the requirement x + 2 ds u in `next` to the stage constraints.
inline StageConstraints with_transition(StageConstraints c, double ds, const Interval& next) {
  const double inv = 1.0 / (2.0 * ds);
  c.lower.push_back({-inv, next.lo * inv});
  c.upper.push_back({-inv, next.hi * inv});
  return c;
}

inline constexpr double kInteriorFractions[] = {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875};

/// Velocity limits at interior points s + f ds, where x = x_k + 2 f ds u.
template <ParametricCurve Curve>
void add_interior_velocity_bounds(StageConstraints& c, const Curve& path,
                                  const KinodynamicLimits& limits, double s, double ds) {
  for (double f : kInteriorFractions) {
    const VectorXd dp = path.first_derivative(s + f * ds);
    double x_max = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < dp.size(); ++i) {
      if (std::abs(dp[i]) >= kNegligibleTangent) {
        x_max = std::min(x_max, (limits.v_max[i] / dp[i]) * (limits.v_max[i] / dp[i]));
      }
    }
    if (std::isfinite(x_max)) c.upper.push_back({-1.0 / (2.0 * f * ds), x_max / (2.0 * f * ds)});
  }
}

/// Everything that constrains (x_k, u_k) on the interval [grid[k], grid[k+1]].
template <ParametricCurve Curve>
StageConstraints interval_constraints(const Curve& path, const KinodynamicLimits& limits,
                                      std::span<const double> grid, std::size_t k,
                                      const Interval& next) {
  const double ds = grid[k + 1] - grid[k];
  auto c = with_transition(second_order_bounds(path, limits, grid[k]), ds, next);
  add_interior_velocity_bounds(c, path, limits, grid[k], ds);
  return c;
}

}  // namespace detail

/// Uniform grid of n_intervals + 1 points over [s_begin, s_end].
inline std::vector<double> uniform_grid(const GeometricPath& path, int n_intervals) {
  std::vector<double> g(static_cast<std::size_t>(n_intervals) + 1);
  const double s0 = path.s_begin(), s1 = path.s_end();
  for (int k = 0; k <= n_intervals; ++k) {
    g[static_cast<std::size_t>(k)] = s0 + (s1 - s0) * static_cast<double>(k) / n_intervals;
  }
  g.back() = s1;
  return g;
}

/// Controllable sets K_0..K_N: K_N = [x_end, x_end]; K_k holds every x at
/// stage k from which some admissible control reaches K_{k+1}.
template <ParametricCurve Curve>
std::vector<Interval> backward_pass(const Curve& path, const KinodynamicLimits& limits,
                                    std::span<const double> grid, double x_end) {
  if (grid.empty()) throw Error("empty parametrization grid");
  if (x_end < 0.0) throw Error("terminal squared path velocity must be non-negative");
  limits.validate(path.dimension());
  std::vector<Interval> sets(grid.size());
  const std::size_t n = grid.size() - 1;
  sets[n] = {x_end, x_end};
  for (std::size_t k = n; k-- > 0;) {
    sets[k] = detail::feasible_x(detail::interval_constraints(path, limits, grid, k, sets[k + 1]));
    if (sets[k].lo > sets[k].hi) {
      // Accept set-inversions at rounding level.
      if (sets[k].lo - sets[k].hi <= detail::kSetTolerance * (1.0 + std::abs(sets[k].hi))) {
        sets[k].lo = sets[k].hi;
      } else {
        throw InfeasibleParametrization("controllable set empty at grid stage " +
                                        std::to_string(k) + " (s=" + std::to_string(grid[k]) +
                                        ")");
      }
    }
  }
  return sets;
}

struct ParametrizationProfile {
  std::vector<double> s;  // grid
  std::vector<double> x;  // sdot^2 at grid points
  std::vector<double> u;  // sddot on [s_k, s_{k+1}), size N
  std::vector<double> t;  // time at grid points

  double duration() const { return t.empty() ? 0.0 : t.back(); }
};

inline constexpr double kMinSquaredVelocity = 1e-9;

/// Greedy forward integration: at every stage pick the largest admissible
/// sddot that keeps the next stage controllable.
template <ParametricCurve Curve>
ParametrizationProfile forward_pass(const Curve& path, const KinodynamicLimits& limits,
                                    std::span<const double> grid, const std::vector<Interval>& sets,
                                    double x_start) {
  if (sets.size() != grid.size()) throw DimensionError("controllable sets do not match grid");
  if (!sets[0].contains(x_start, detail::kSetTolerance * (1.0 + x_start))) {
    throw InfeasibleParametrization("initial squared velocity outside the controllable set");
  }
  ParametrizationProfile p;
  p.s.assign(grid.begin(), grid.end());
  p.x.resize(grid.size());
  p.u.resize(grid.size() - 1);
  p.t.resize(grid.size());
  p.x[0] = std::clamp(x_start, sets[0].lo, sets[0].hi);
  p.t[0] = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double ds = grid[k + 1] - grid[k];
    const auto stage = detail::interval_constraints(path, limits, grid, k, sets[k + 1]);
    const double xk = p.x[k];
    const double u = stage.u_max(xk);
    double xn = std::max(xk + 2.0 * ds * u, 0.0);
    xn = std::clamp(xn, sets[k + 1].lo, sets[k + 1].hi);
    p.u[k] = (xn - xk) / (2.0 * ds);
    p.x[k + 1] = xn;
    double root_sum = std::sqrt(xk) + std::sqrt(xn);
    if (root_sum <= 0.0) root_sum = 2.0 * std::sqrt(kMinSquaredVelocity);
    // Exact elapsed time for constant sddot across the interval.
    p.t[k + 1] = p.t[k] + 2.0 * ds / root_sum;
  }
  return p;
}

struct ControlTrajectoryPoint {
  double t = 0.0;
  VectorXd q;
  VectorXd dq;
  VectorXd ddq;
};

struct SampledTrajectory {
  double sample_time = 0.01;
  std::vector<ControlTrajectoryPoint> points;

  std::size_t size() const { return points.size(); }
  Eigen::Index dimension() const { return points.empty() ? 0 : points.front().q.size(); }
  Eigen::Index joint_count() const { return dimension() - 4; }
  double duration() const { return points.empty() ? 0.0 : points.back().t; }
};

/// Samples the parametrized path at t = k * sample_time for k = 0..ceil(t_end / sample_time).
/// Samples past t_end hold the final state.
inline SampledTrajectory sample_trajectory(const GeometricPath& path,
                                           const ParametrizationProfile& profile,
                                           double sample_time) {
  if (!(sample_time > 0.0)) throw Error("sample time must be positive");
  SampledTrajectory traj;
  traj.sample_time = sample_time;
  const double t_end = profile.duration();
  const auto n_t = static_cast<long>(std::ceil(t_end / sample_time - 1e-9));
  traj.points.reserve(static_cast<std::size_t>(n_t) + 1);
  std::size_t k = 0;
  const std::size_t last = profile.u.size();
  for (long i = 0; i <= n_t; ++i) {
    const double t = static_cast<double>(i) * sample_time;
    ControlTrajectoryPoint pt;
    pt.t = t;
    double s, sdot, sddot;
    if (last == 0 || t >= t_end) {
      s = profile.s.back();
      sdot = std::sqrt(profile.x.back());
      sddot = 0.0;
    } else {
      while (k + 1 < last && profile.t[k + 1] <= t) ++k;
      const double tau = t - profile.t[k];
      const double v0 = std::sqrt(profile.x[k]);
      sddot = profile.u[k];
      sdot = std::max(v0 + sddot * tau, 0.0);
      s = std::min(profile.s[k] + v0 * tau + 0.5 * sddot * tau * tau, profile.s[k + 1]);
    }
    const VectorXd dp = path.first_derivative(s);
    pt.q = path.position(s);
    pt.dq = dp * sdot;
    pt.ddq = dp * sddot + path.second_derivative(s) * (sdot * sdot);
    traj.points.push_back(std::move(pt));
  }
  return traj;
}

struct ToppOptions {
  int grid_intervals = 1000;
  double x_start = 0.0;
  double x_end = 0.0;
};

struct ToppResult {
  GeometricPath path;
  ParametrizationProfile profile;
  SampledTrajectory trajectory;
};

/// Path -> spline -> controllable sets -> greedy profile -> uniform samples.
inline ToppResult parametrize(const Path& path, const KinodynamicLimits& limits, double sample_time,
                              const ToppOptions& opts = {}) {
  ToppResult r;
  r.path = fit_geometric_path(path);
  limits.validate(r.path.dimension());
  const auto grid = uniform_grid(r.path, opts.grid_intervals);
  const auto sets = backward_pass(r.path, limits, grid, opts.x_end);
  r.profile = forward_pass(r.path, limits, grid, sets, opts.x_start);
  r.trajectory = sample_trajectory(r.path, r.profile, sample_time);
  return r;
}

}  // namespace amp
