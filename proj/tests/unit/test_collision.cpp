#include <gtest/gtest.h>

#include "amp/collision.hpp"
#include "amp/random.hpp"

namespace amp {
namespace {

// A robot that is only its body sphere.
RobotGeometry sphere_robot(double radius) {
  RobotGeometry g;
  g.body_radius = radius;
  g.arm = DHTable({DHRow{0.0, 0.0, 0.0, 0.0, JointKind::fixed}});
  return g;
}

RobotGeometry default_robot() {
  RobotGeometry g;
  g.arm = DHTable::three_dof_arm();
  g.body_to_arm = HomogeneousTransform(rot_z(-kPi / 2), Vector3d(0.05, 0.0, 0.05));
  return g;
}

ControlSpacePoint body_at(const Vector3d& p) { return ControlSpacePoint(p, 0.0, JointVector(0)); }

ControlSpacePoint arm_config(const Vector3d& p, double yaw, double q1, double q2, double q3) {
  JointVector q(3);
  q << q1, q2, q3;
  return ControlSpacePoint(p, yaw, q);
}

ObstacleSet unit_box() {
  ObstacleSet obs;
  obs.boxes.push_back({Vector3d(0, 0, 0), Vector3d(1, 1, 1)});
  return obs;
}

TEST(Primitives, BoxDistance) {
  const Box b{Vector3d(0, 0, 0), Vector3d(1, 1, 1)};
  EXPECT_EQ(b.distance(Vector3d(0.5, 0.5, 0.5)), 0.0);
  EXPECT_DOUBLE_EQ(b.distance(Vector3d(2, 0.5, 0.5)), 1.0);
  EXPECT_DOUBLE_EQ(b.distance(Vector3d(2, 2, 0.5)), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(b.distance(Vector3d(-3, -4, 0.5)), 5.0);
}

TEST(Primitives, CylinderDistance) {
  const Cylinder c{Eigen::Vector2d(1, 1), 0.5, 0.0, 2.0};
  EXPECT_EQ(c.distance(Vector3d(1, 1, 1)), 0.0);
  EXPECT_DOUBLE_EQ(c.distance(Vector3d(3, 1, 1)), 1.5);
  EXPECT_DOUBLE_EQ(c.distance(Vector3d(1, 1, 5)), 3.0);
  EXPECT_NEAR(c.distance(Vector3d(1 + 0.5 + 3, 1, 2 + 4)), 5.0, 1e-15);
}

TEST(Primitives, SegmentDistanceMatchesDenseSampling) {
  Rng rng(8);
  const Box box{Vector3d(-0.5, -0.2, 0.0), Vector3d(0.5, 0.2, 1.0)};
  const Cylinder cyl{Eigen::Vector2d(0.3, -0.4), 0.25, 0.2, 0.9};
  for (int i = 0; i < 200; ++i) {
    const Vector3d a(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-1, 2));
    const Vector3d b(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-1, 2));
    double dense_box = 1e9, dense_cyl = 1e9;
    for (int k = 0; k <= 20000; ++k) {
      const Vector3d p = a + (b - a) * (k / 20000.0);
      dense_box = std::min(dense_box, box.distance(p));
      dense_cyl = std::min(dense_cyl, cyl.distance(p));
    }
    EXPECT_NEAR(segment_distance(box, a, b), dense_box, 1e-6);
    EXPECT_NEAR(segment_distance(cyl, a, b), dense_cyl, 1e-6);
  }
}

TEST(CollisionCheckConfig, EmptyObstacleSetIsFree) {
  Rng rng(2);
  const auto g = default_robot();
  for (int i = 0; i < 20; ++i) {
    EXPECT_TRUE(collision_check_config(
        arm_config(Vector3d(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)), rng.uniform(-kPi, kPi),
                   rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)),
        ObstacleSet{}, g));
  }
}

TEST(CollisionCheckConfig, BodyInsideBoxCollides) {
  ObstacleSet obs;
  obs.boxes.push_back({Vector3d(-2, -2, -2), Vector3d(2, 2, 2)});
  EXPECT_FALSE(collision_check_config(body_at(Vector3d::Zero()), obs, sphere_robot(0.35)));
}

TEST(CollisionCheckConfig, SphereClearanceAtBoxFace) {
  const double radius = 0.35, inflation = 0.05;
  auto obs = unit_box();
  obs.inflation = inflation;
  const auto g = sphere_robot(radius);
  const double face = 1.0;
  EXPECT_TRUE(collision_check_config(body_at(Vector3d(face + radius + inflation + 1e-3, 0.5, 0.5)), obs, g));
  EXPECT_FALSE(collision_check_config(body_at(Vector3d(face + radius + inflation - 1e-3, 0.5, 0.5)), obs, g));
}

TEST(CollisionCheckConfig, MarginAddsClearance) {
  const auto g = sphere_robot(0.35);
  const auto p = body_at(Vector3d(1.0 + 0.35 + 0.005, 0.5, 0.5));
  EXPECT_TRUE(collision_check_config(p, unit_box(), g));
  EXPECT_FALSE(collision_check_config(p, unit_box(), g, 0.01));
}

TEST(CollisionCheckConfig, ArmLinkCollidesWhileBodyIsClear) {
  const auto g = default_robot();
  // The arm reaches about 0.64 m ahead of the body along body x.
  ObstacleSet obs;
  obs.boxes.push_back({Vector3d(0.55, -0.1, 0.0), Vector3d(0.7, 0.1, 0.3)});
  const auto pose = arm_config(Vector3d(0, 0, 0), 0.0, 0.0, 0.3, -0.6);
  EXPECT_TRUE(sphere_clear(pose.position(), g.body_radius, obs));
  EXPECT_FALSE(collision_check_config(pose, obs, g));
  // Yawing the vehicle by pi swings the arm away.
  EXPECT_TRUE(collision_check_config(arm_config(Vector3d(0, 0, 0), kPi, 0.0, 0.3, -0.6), obs, g));
}

TEST(CollisionCheckConfig, CylinderObstacle) {
  ObstacleSet obs;
  obs.cylinders.push_back({Eigen::Vector2d(0, 0), 0.2, 0.0, 2.0});
  const auto g = sphere_robot(0.3);
  EXPECT_FALSE(collision_check_config(body_at(Vector3d(0.45, 0, 1)), obs, g));
  EXPECT_TRUE(collision_check_config(body_at(Vector3d(0.55, 0, 1)), obs, g));
  EXPECT_TRUE(collision_check_config(body_at(Vector3d(0, 0, 2.31)), obs, g));
}

TEST(CollisionCheckSegment, DegenerateFreeSegment) {
  const auto a = body_at(Vector3d(3, 3, 3));
  EXPECT_TRUE(collision_check_segment(a, a, unit_box(), sphere_robot(0.3), 0.01));
}

TEST(CollisionCheckSegment, ThroughObstacleCollides) {
  EXPECT_FALSE(collision_check_segment(body_at(Vector3d(-2, 0.5, 0.5)), body_at(Vector3d(3, 0.5, 0.5)),
                                       unit_box(), sphere_robot(0.1), 0.01));
}

TEST(CollisionCheckSegment, NonPositiveResolutionThrows) {
  const auto a = body_at(Vector3d::Zero());
  EXPECT_THROW(collision_check_segment(a, a, unit_box(), sphere_robot(0.1), 0.0), std::invalid_argument);
}

// Corner grazing: the coarse check agrees with dense sampling at resolution/100.
TEST(CollisionCheckSegment, CornerGrazeMatchesDenseOracle) {
  const double r = 0.3, res = 0.02;
  const auto g = sphere_robot(r);
  for (double offset : {-0.02, -0.005, 0.005, 0.02, 0.05}) {
    // Diagonal pass by the (1, 1, z) edge at closest distance r + offset.
    const double d = (r + offset) / std::sqrt(2.0);
    const Vector3d corner(1 + d, 1 + d, 0.5);
    const Vector3d dir = Vector3d(1, -1, 0).normalized();
    const auto a = body_at(corner - 1.5 * dir), b = body_at(corner + 1.5 * dir);
    bool dense = true;
    const int n = static_cast<int>(std::ceil(3.0 / (res / 100.0)));
    for (int k = 0; k <= n && dense; ++k) {
      dense = collision_check_config(interpolate(a, b, static_cast<double>(k) / n), unit_box(), g);
    }
    EXPECT_EQ(collision_check_segment(a, b, unit_box(), g, res), dense) << "offset " << offset;
    EXPECT_EQ(dense, offset > 0.0);
  }
}

TEST(MotionBound, CoversArmSweep) {
  const auto g = default_robot();
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto a = arm_config(Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), 1), rng.uniform(-kPi, kPi),
                              rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const auto b = arm_config(Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), 1), rng.uniform(-kPi, kPi),
                              rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double bound = motion_bound(a, b, g);
    // Every robot point moves at most bound * dt over a parameter step dt.
    const int n = 50;
    for (int k = 0; k < n; ++k) {
      const auto sa = arm_segments(interpolate(a, b, static_cast<double>(k) / n), g);
      const auto sb = arm_segments(interpolate(a, b, static_cast<double>(k + 1) / n), g);
      ASSERT_EQ(sa.size(), sb.size());
      for (std::size_t j = 0; j < sa.size(); ++j) {
        EXPECT_LE((sa[j].second - sb[j].second).norm(), bound / n + 1e-12);
      }
    }
  }
}

}  // namespace
}  // namespace amp
