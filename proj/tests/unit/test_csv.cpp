#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "amp/artifacts.hpp"
#include "amp/random.hpp"

namespace amp {
namespace {

CsvTable round_trip(const CsvTable& t) {
  std::stringstream ss;
  write_csv(ss, t);
  return read_csv(ss);
}

TEST(Csv, ShortestRoundTripFormatting) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(-2.5e-10), "-2.5e-10");
  EXPECT_EQ(format_double(-0.0), "-0");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Csv, RandomValuesRoundTripExactly) {
  Rng rng(99);
  CsvTable t;
  t.header = {"a", "b", "c"};
  for (int i = 0; i < 500; ++i) {
    t.rows.push_back({rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-300, 300)), rng.uniform(),
                      static_cast<double>(i)});
  }
  const auto back = round_trip(t);
  EXPECT_EQ(back.header, t.header);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_EQ(back.rows[i], t.rows[i]);
}

TEST(Csv, SpecialValues) {
  CsvTable t;
  t.header = {"v"};
  t.rows = {{-0.0}, {std::numeric_limits<double>::quiet_NaN()}, {std::numeric_limits<double>::infinity()},
            {std::numeric_limits<double>::denorm_min()}, {std::numeric_limits<double>::max()}};
  const auto back = round_trip(t);
  EXPECT_TRUE(std::signbit(back.rows[0][0]));
  EXPECT_EQ(back.rows[0][0], 0.0);
  EXPECT_TRUE(std::isnan(back.rows[1][0]));
  EXPECT_EQ(back.rows[2][0], std::numeric_limits<double>::infinity());
  EXPECT_EQ(back.rows[3][0], std::numeric_limits<double>::denorm_min());
  EXPECT_EQ(back.rows[4][0], std::numeric_limits<double>::max());
}

TEST(Csv, ToleratesCrlfBlankLinesAndPlusSign) {
  std::istringstream is("a,b\r\n\r\n1,+2\r\n\n3.5,-4e2\r\n");
  const auto t = read_csv(is);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(t.rows[1], (std::vector<double>{3.5, -400.0}));
  EXPECT_EQ(t.column("b"), 1u);
}

TEST(Csv, MalformedInputReportsLine) {
  std::istringstream wrong_width("a,b\n1,2\n3\n");
  try {
    read_csv(wrong_width, "f.csv");
    FAIL();
  } catch (const CsvError& e) {
    EXPECT_NE(std::string(e.what()).find("f.csv:3"), std::string::npos) << e.what();
  }
  std::istringstream junk("a\n1.5x\n");
  try {
    read_csv(junk, "g.csv");
    FAIL();
  } catch (const CsvError& e) {
    EXPECT_NE(std::string(e.what()).find("g.csv:2"), std::string::npos) << e.what();
  }
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), CsvError);
  std::istringstream blank_field("a,b\n1,\n");
  EXPECT_THROW(read_csv(blank_field), CsvError);
}

TEST(Csv, MissingColumnAndFile) {
  CsvTable t;
  t.header = {"a"};
  EXPECT_THROW(t.column("b"), CsvError);
  EXPECT_THROW(read_csv(std::string("/nonexistent/dir/file.csv")), CsvError);
}

TEST(Csv, WriterRejectsRaggedRows) {
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{1.0}};
  std::ostringstream os;
  EXPECT_THROW(write_csv(os, t), CsvError);
}

TEST(Artifacts, PathRoundTrip) {
  JointVector q(3);
  q << 0.1, -0.2, 0.3;
  const Path path{ControlSpacePoint(Vector3d(0, 0, 1), 0.0, q), ControlSpacePoint(Vector3d(1.0 / 3, 2, 1), 2.5, q)};
  const auto t = path_table(path);
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "y", "z", "psi", "q1", "q2", "q3"}));
  const Path back = path_from_table(round_trip(t));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back[0] == path[0]);
  EXPECT_TRUE(back[1] == path[1]);
}

TEST(Artifacts, TrajectoryRoundTrip) {
  JointVector q(3);
  q << 0.0, 0.3, -0.6;
  const Path path{ControlSpacePoint(Vector3d(0, 0, 1), 0.0, q), ControlSpacePoint(Vector3d(1, 0.5, 1), 0.2, q)};
  const auto traj = parametrize(path, {VectorXd::Constant(7, 1.0), VectorXd::Constant(7, 2.0)}, 0.01).trajectory;
  const auto t = trajectory_table(traj);
  EXPECT_EQ(t.header.size(), 22u);
  EXPECT_EQ(t.header[8], "dx");
  EXPECT_EQ(t.header[21], "ddq3");
  const auto back = trajectory_from_table(round_trip(t), 0.01);
  ASSERT_EQ(back.size(), traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    EXPECT_EQ(back.points[k].t, traj.points[k].t);
    EXPECT_EQ(back.points[k].q, traj.points[k].q);
    EXPECT_EQ(back.points[k].dq, traj.points[k].dq);
    EXPECT_EQ(back.points[k].ddq, traj.points[k].ddq);
  }
}

TEST(Artifacts, SimTraceRoundTrip) {
  JointVector q(2);
  q << 0.1, 0.2;
  SampledTrajectory traj;
  SimulationResult sim;
  for (int k = 0; k < 3; ++k) {
    ControlTrajectoryPoint p;
    p.t = 0.01 * k;
    p.q = VectorXd::LinSpaced(6, k, k + 1);
    p.dq = p.ddq = VectorXd::Zero(6);
    traj.points.push_back(p);
    FullState s;
    s.position = Vector3d(k, 2.0 * k, 1);
    s.attitude = Vector3d(0.01 * k, -0.02, 0.3);
    s.joints = q * k;
    s.joint_rates = JointVector::Zero(2);
    sim.times.push_back(p.t);
    sim.states.push_back(s);
  }
  const auto t = sim_trace_table(traj, sim);
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "x_ref", "y_ref", "z_ref", "psi_ref", "q1_ref", "q2_ref", "x",
                                                "y", "z", "roll", "pitch", "yaw", "q1", "q2"}));
  const auto back = sim_from_table(round_trip(t));
  ASSERT_EQ(back.states.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(back.times[k], sim.times[k]);
    EXPECT_EQ(back.states[k].position, sim.states[k].position);
    EXPECT_EQ(back.states[k].attitude, sim.states[k].attitude);
    EXPECT_EQ(back.states[k].joints, sim.states[k].joints);
  }
}

TEST(Artifacts, HeaderMismatchRejected) {
  CsvTable t;
  t.header = {"x", "y", "z", "yaw", "q1"};
  EXPECT_THROW(path_from_table(t), CsvError);
  t.header = {"t", "x"};
  EXPECT_THROW(trajectory_from_table(t, 0.01), CsvError);
}

TEST(Artifacts, ErrorsTableWithoutCompensation) {
  const std::vector<TrackingError> trace{{0.0, 0.1, 0.2, -0.3}, {0.01, 0.4, 0.5, 0.6}};
  const auto t = errors_table(trace, trace, nullptr);
  EXPECT_EQ(t.header, error_columns());
  EXPECT_TRUE(std::isnan(t.rows[0][4]));
  EXPECT_EQ(t.rows[1][3], 0.6);
  const auto with = errors_table(trace, trace, &trace);
  EXPECT_EQ(with.rows[0][4], -0.3);
}

}  // namespace
}  // namespace amp
