#include <gtest/gtest.h>

#include "amp/random.hpp"
#include "amp/spline.hpp"

namespace amp {
namespace {

ControlSpacePoint pt(double x, double y, double z, double yaw, double q1 = 0.0) {
  JointVector q(1);
  q << q1;
  return ControlSpacePoint(Vector3d(x, y, z), yaw, q);
}

Path wiggly_path() {
  return {pt(0, 0, 1, 0, 0), pt(1, 0.5, 1.2, 0.4, 0.3), pt(1.5, 1.5, 1.0, 1.2, -0.2), pt(2.5, 1.0, 0.8, 0.5, 0.1),
          pt(3, 0, 1, 0, 0)};
}

TEST(GeometricPath, TwoPointsGiveStraightSegment) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 0), pt(1, 2, 3, 0.5, 0.2)});
  for (double s = 0.0; s <= g.s_end(); s += g.s_end() / 17) {
    EXPECT_LT(g.second_derivative(s).norm(), 1e-12);
  }
  EXPECT_NEAR(g.first_derivative(0.3).norm(), 1.0, 1e-12);
}

TEST(GeometricPath, CollinearPointsStayStraight) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 0), pt(0.2, 0, 1, 0), pt(1.5, 0, 1, 0), pt(2, 0, 1, 0)});
  for (double s = 0.0; s <= g.s_end(); s += 0.01) {
    EXPECT_LT(g.second_derivative(s).norm(), 1e-9);
    EXPECT_NEAR(g.position(s)[0], s, 1e-12);
  }
}

TEST(GeometricPath, ReproducesKnotsExactly) {
  const Path path = wiggly_path();
  const auto g = fit_geometric_path(path);
  ASSERT_EQ(g.knots().size(), path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    EXPECT_EQ(g.position(g.knots()[i]), path[i].coords()) << "knot " << i;
  }
}

TEST(GeometricPath, KnotSpacingIsChordLength) {
  const Path path = wiggly_path();
  const auto g = fit_geometric_path(path);
  for (std::size_t i = 1; i < path.size(); ++i) {
    EXPECT_NEAR(g.knots()[i] - g.knots()[i - 1], (path[i].coords() - path[i - 1].coords()).norm(), 1e-15);
  }
}

TEST(GeometricPath, DerivativesMatchFiniteDifferences) {
  const auto g = fit_geometric_path(wiggly_path());
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const double s = rng.uniform(0.05, g.s_end() - 0.05);
    // Central differences straddling a knot lose the O(h^2) rate; skip those.
    bool near_knot = false;
    for (double k : g.knots()) near_knot = near_knot || std::abs(k - s) < 2e-3;
    if (near_knot) continue;
    const double h = 1e-4;
    const VectorXd fd1 = (g.position(s + h) - g.position(s - h)) / (2 * h);
    const VectorXd fd2 = (g.first_derivative(s + h) - g.first_derivative(s - h)) / (2 * h);
    EXPECT_LT((fd1 - g.first_derivative(s)).norm(), 1e-6);
    EXPECT_LT((fd2 - g.second_derivative(s)).norm(), 1e-6);
  }
}

TEST(GeometricPath, ContinuousAtKnots) {
  const auto g = fit_geometric_path(wiggly_path());
  for (std::size_t i = 1; i + 1 < g.knots().size(); ++i) {
    const double s = g.knots()[i];
    const double e = 1e-12;
    EXPECT_LT((g.first_derivative(s - e) - g.first_derivative(s)).norm(), 1e-9);
    EXPECT_LT((g.second_derivative(s - e) - g.second_derivative(s)).norm(), 1e-9);
  }
}

TEST(GeometricPath, NaturalEndConditions) {
  const auto g = fit_geometric_path(wiggly_path());
  EXPECT_LT(g.second_derivative(g.s_begin()).norm(), 1e-12);
  EXPECT_LT(g.second_derivative(g.s_end()).norm(), 1e-9);
}

TEST(GeometricPath, DuplicatePointsMerged) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 0), pt(0, 0, 1, 0), pt(1, 0, 1, 0), pt(1, 0, 1, 0), pt(2, 1, 1, 0)});
  EXPECT_EQ(g.knots().size(), 3u);
}

TEST(GeometricPath, SinglePointRejected) {
  EXPECT_THROW(fit_geometric_path({pt(0, 0, 1, 0)}), Error);
  EXPECT_THROW(fit_geometric_path({pt(0, 0, 1, 0), pt(0, 0, 1, 0)}), Error);
  EXPECT_THROW(fit_geometric_path({}), Error);
}

TEST(GeometricPath, MixedDimensionsRejected) {
  EXPECT_THROW(fit_geometric_path({pt(0, 0, 1, 0), ControlSpacePoint(Vector3d(1, 0, 1), 0.0, JointVector(0))}),
               DimensionError);
}

TEST(GeometricPath, YawTakesShortArc) {
  const auto g = fit_geometric_path({pt(0, 0, 1, 3.0), pt(1, 0, 1, -3.0)});
  // Unwrapped: 3.0 -> 2 pi - 3.0, a 0.283 rad turn through pi.
  EXPECT_NEAR(g.position(g.s_end())[3], 2 * kPi - 3.0, 1e-12);
  for (double s = 0.0; s <= g.s_end(); s += 0.05) {
    const double yaw = g.position(s)[3];
    EXPECT_GE(yaw, 3.0 - 1e-12);
    EXPECT_LE(yaw, 2 * kPi - 3.0 + 1e-12);
  }
}

}  // namespace
}  // namespace amp
