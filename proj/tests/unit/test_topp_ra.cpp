#include <gtest/gtest.h>

#include "amp/random.hpp"
#include "amp/topp_ra.hpp"

namespace amp {
namespace {

// Planar circle P(s) = (r cos s, r sin s) with exact derivatives.
struct CirclePath {
  double r = 1.5;
  Eigen::Index dimension() const { return 2; }
  VectorXd first_derivative(double s) const { return Eigen::Vector2d(-r * std::sin(s), r * std::cos(s)); }
  VectorXd second_derivative(double s) const { return Eigen::Vector2d(-r * std::cos(s), -r * std::sin(s)); }
};

ControlSpacePoint pt(const VectorXd& c) { return ControlSpacePoint(c); }

ControlSpacePoint pt(double x, double y, double z, double yaw, double q1 = 0.0) {
  JointVector q(1);
  q << q1;
  return ControlSpacePoint(Vector3d(x, y, z), yaw, q);
}

KinodynamicLimits uniform_limits(Eigen::Index dim, double v, double a) {
  return {VectorXd::Constant(dim, v), VectorXd::Constant(dim, a)};
}

// Rest-to-rest time-optimal duration along a straight line.
double bang_bang_duration(double length, double v, double a) {
  if (length <= v * v / a) return 2.0 * std::sqrt(length / a);
  return length / v + v / a;
}

Path curved_path() {
  return {pt(0, 0, 1, 0, 0), pt(1, 0.5, 1.2, 0.4, 0.3), pt(1.5, 1.5, 1.0, 1.2, -0.2), pt(2.5, 1.0, 0.8, 0.5, 0.1)};
}

KinodynamicLimits curved_limits() {
  KinodynamicLimits l;
  l.v_max.resize(5);
  l.a_max.resize(5);
  l.v_max << 1.0, 1.0, 1.0, 0.5, 1.0;
  l.a_max << 2.0, 2.0, 2.0, 1.0, 2.0;
  return l;
}

TEST(SecondOrderBounds, UnitLine) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 0), pt(2, 0, 1, 0)});
  const auto c = second_order_bounds(g, uniform_limits(5, 1.0, 1.0), 0.7);
  EXPECT_DOUBLE_EQ(c.x_max, 1.0);
  for (double x : {0.0, 0.3, 1.0}) {
    EXPECT_DOUBLE_EQ(c.u_min(x), -1.0);
    EXPECT_DOUBLE_EQ(c.u_max(x), 1.0);
  }
}

TEST(SecondOrderBounds, DiagonalLineUsesTightestCoordinate) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 0), pt(3, 4, 1, 0)});
  const auto c = second_order_bounds(g, uniform_limits(5, 1.0, 2.0), 1.0);
  EXPECT_NEAR(c.x_max, std::pow(1.0 / 0.8, 2), 1e-12);
  EXPECT_NEAR(c.u_max(0.5), 2.0 / 0.8, 1e-12);
  EXPECT_NEAR(c.u_min(0.5), -2.0 / 0.8, 1e-12);
}

TEST(SecondOrderBounds, CircleMatchesSymbolicOracle) {
  KinodynamicLimits l;
  l.v_max = Eigen::Vector2d(1.0, 0.5);
  l.a_max = Eigen::Vector2d(2.0, 1.5);
  const CirclePath circle;
  struct Case {
    double s, x, x_max, u_min, u_max;
  };
  for (const Case& k : {Case{0.3, 0.1, 0.12174321281361634775, -1.0158179765771232776, 1.0776852264990479242},
                        Case{1.2, 0.05, 0.51162202380361193548, -1.4499941487482732172, 1.4111161918114527260}}) {
    const auto c = second_order_bounds(circle, l, k.s);
    EXPECT_NEAR(c.x_max, k.x_max, 1e-14);
    EXPECT_NEAR(c.u_min(k.x), k.u_min, 1e-13);
    EXPECT_NEAR(c.u_max(k.x), k.u_max, 1e-13);
  }
}

TEST(BackwardPass, SinglePointGrid) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 0), pt(1, 0, 1, 0)});
  const std::vector<double> grid{0.0};
  const auto sets = backward_pass(g, uniform_limits(5, 1, 1), grid, 0.25);
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_EQ(sets[0].lo, 0.25);
  EXPECT_EQ(sets[0].hi, 0.25);
}

TEST(BackwardPass, BrakingEnvelope) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 0), pt(1, 0, 1, 0)});
  const auto grid = uniform_grid(g, 1000);
  const auto sets = backward_pass(g, uniform_limits(5, 1.0, 1.0), grid, 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double delta = 1.0 - grid[k];
    EXPECT_NEAR(sets[k].hi, std::min(1.0, 2.0 * delta), 1e-12) << "stage " << k;
    EXPECT_EQ(sets[k].lo, 0.0);
  }
}

TEST(BackwardPass, SetsWithinVelocityBound) {
  const auto g = fit_geometric_path(curved_path());
  const auto limits = curved_limits();
  const auto grid = uniform_grid(g, 400);
  const auto sets = backward_pass(g, limits, grid, 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_GE(sets[k].lo, 0.0);
    EXPECT_LE(sets[k].lo, sets[k].hi);
    EXPECT_LE(sets[k].hi, second_order_bounds(g, limits, grid[k]).x_max * (1 + 1e-12));
  }
}

TEST(BackwardPass, UnreachableTerminalVelocityThrows) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 0), pt(1, 0, 1, 0)});
  const auto grid = uniform_grid(g, 100);
  EXPECT_THROW(backward_pass(g, uniform_limits(5, 1, 1), grid, 100.0), InfeasibleParametrization);
}

TEST(BackwardPass, NegativeTerminalVelocityRejected) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 0), pt(1, 0, 1, 0)});
  const auto grid = uniform_grid(g, 10);
  EXPECT_THROW(backward_pass(g, uniform_limits(5, 1, 1), grid, -1.0), Error);
}

TEST(ForwardPass, StartOutsideControllableSetThrows) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 0), pt(1, 0, 1, 0)});
  const auto grid = uniform_grid(g, 100);
  const auto sets = backward_pass(g, uniform_limits(5, 1, 1), grid, 0.0);
  EXPECT_THROW(forward_pass(g, uniform_limits(5, 1, 1), grid, sets, 4.0), InfeasibleParametrization);
  EXPECT_NO_THROW(forward_pass(g, uniform_limits(5, 1, 1), grid, sets, sets[0].hi));
}

TEST(Parametrize, RejectsBadLimits) {
  auto l = uniform_limits(5, 1, 1);
  l.a_max[2] = 0.0;
  EXPECT_THROW(parametrize({pt(0, 0, 1, 0), pt(1, 0, 1, 0)}, l, 0.01), Error);
  EXPECT_THROW(parametrize({pt(0, 0, 1, 0), pt(1, 0, 1, 0)}, uniform_limits(4, 1, 1), 0.01), DimensionError);
}

TEST(Parametrize, ClosedFormDurations) {
  const auto l = uniform_limits(5, 1.0, 1.0);
  EXPECT_NEAR(parametrize({pt(0, 0, 1, 0), pt(1, 0, 1, 0)}, l, 0.01).profile.duration(), 2.0, 0.01 * 2.0);
  EXPECT_NEAR(parametrize({pt(0, 0, 1, 0), pt(10, 0, 1, 0)}, l, 0.01).profile.duration(), 11.0, 0.01 * 11.0);
}

TEST(Parametrize, RandomStraightLinesMatchBangBang) {
  Rng rng(2024);
  int triangular = 0, trapezoidal = 0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Index dim = 7;
    VectorXd a = VectorXd::Zero(dim), b(dim);
    for (Eigen::Index j = 0; j < dim; ++j) b[j] = rng.uniform(-1.0, 1.0);
    const double length = rng.uniform(0.05, 4.0);
    b = b.normalized() * length;
    KinodynamicLimits l;
    l.v_max.resize(dim);
    l.a_max.resize(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      l.v_max[j] = rng.uniform(0.3, 2.0);
      l.a_max[j] = rng.uniform(0.3, 3.0);
    }
    const VectorXd dir = (b - a).cwiseAbs() / length;
    double v = 1e300, acc = 1e300;
    for (Eigen::Index j = 0; j < dim; ++j) {
      v = std::min(v, l.v_max[j] / dir[j]);
      acc = std::min(acc, l.a_max[j] / dir[j]);
    }
    (length <= v * v / acc ? triangular : trapezoidal)++;
    const auto r = parametrize({pt(a), pt(b)}, l, 0.01);
    const double expected = bang_bang_duration(length, v, acc);
    EXPECT_NEAR(r.profile.duration(), expected, 0.01 * expected) << "case " << i;
    for (const auto& p : r.trajectory.points) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        EXPECT_LE(std::abs(p.dq[j]), l.v_max[j] + 1e-6);
        EXPECT_LE(std::abs(p.ddq[j]), l.a_max[j] * 1.02);
      }
    }
  }
  EXPECT_GT(triangular, 0);
  EXPECT_GT(trapezoidal, 0);
}

TEST(Parametrize, CurvedPathRespectsLimits) {
  const auto limits = curved_limits();
  const auto r = parametrize(curved_path(), limits, 0.01);
  for (const auto& p : r.trajectory.points) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      EXPECT_LE(std::abs(p.dq[j]), limits.v_max[j] + 1e-6) << "t " << p.t << " coord " << j;
      EXPECT_LE(std::abs(p.ddq[j]), limits.a_max[j] * 1.02) << "t " << p.t << " coord " << j;
    }
  }
}

TEST(Parametrize, GridRefinementChangesDurationLittle) {
  const auto limits = curved_limits();
  ToppOptions coarse, fine;
  coarse.grid_intervals = 500;
  fine.grid_intervals = 1000;
  const double t_coarse = parametrize(curved_path(), limits, 0.01, coarse).profile.duration();
  const double t_fine = parametrize(curved_path(), limits, 0.01, fine).profile.duration();
  EXPECT_LT(std::abs(t_coarse - t_fine) / t_fine, 0.005);
}

TEST(Parametrize, UniformSamplesAndRestAtEnds) {
  const auto r = parametrize(curved_path(), curved_limits(), 0.01);
  const auto& pts = r.trajectory.points;
  ASSERT_GT(pts.size(), 2u);
  for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_EQ(pts[k].t, static_cast<double>(k) * 0.01);
  EXPECT_GE(pts.back().t, r.profile.duration());
  EXPECT_LT(pts.back().t - r.profile.duration(), 0.01);
  EXPECT_LT(pts.front().dq.norm(), 1e-9);
  EXPECT_LT(pts.back().dq.norm(), 1e-3);
  EXPECT_EQ(pts.front().q, curved_path().front().coords());
  EXPECT_LT((pts.back().q - curved_path().back().coords()).norm(), 1e-9);
  for (std::size_t k = 1; k < r.profile.t.size(); ++k) EXPECT_GT(r.profile.t[k], r.profile.t[k - 1]);
}

TEST(Parametrize, VelocityMatchesFiniteDifference) {
  const auto r = parametrize(curved_path(), curved_limits(), 0.01);
  const auto& pts = r.trajectory.points;
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
    const VectorXd fd = (pts[k + 1].q - pts[k - 1].q) / 0.02;
    EXPECT_LE((fd - pts[k].dq).norm(), 0.02 * std::max(pts[k].dq.norm(), 0.05)) << "t " << pts[k].t;
  }
}

}  // namespace
}  // namespace amp
