#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace amp {

using Eigen::Matrix3d;
using Eigen::Vector3d;
using Eigen::VectorXd;

/// Joint-space vector of an M-DoF manipulator (radians or meters per joint).
using JointVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kStandardGravity = 9.81;

// Error hierarchy. Every failure that the CLI maps to an exit code derives
// from amp::Error.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class InvalidWaypoint : public Error {
public:
  InvalidWaypoint(std::size_t index, const std::string& why)
      : Error("waypoint " + std::to_string(index) + ": " + why), index_(index) {}
  std::size_t index() const { return index_; }

private:
  std::size_t index_;
};

class PlanningTimeout : public Error {
public:
  using Error::Error;
};

class InfeasibleParametrization : public Error {
public:
  using Error::Error;
};

class FlatnessSingularity : public Error {
public:
  using Error::Error;
};

class StateDivergence : public Error {
public:
  StateDivergence(double t, const std::string& why)
      : Error("state diverged at t=" + std::to_string(t) + " s: " + why), time_(t) {}
  double time() const { return time_; }

private:
  double time_;
};

class ScenarioError : public Error {
public:
  using Error::Error;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

inline void require_dimension(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace amp
