#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "harvest/kinematics.hpp"
#include "test_support.hpp"

using namespace harvest;
using namespace harvest::testing;

namespace {

// Independent homogeneous-matrix chain with a hand-written Rodrigues formula.
Eigen::Matrix4d rodrigues(const Vec3& k, double angle) {
  Eigen::Matrix3d K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity() + std::sin(angle) * K + (1.0 - std::cos(angle)) * K * K;
  return t;
}

Eigen::Matrix4d chain_oracle(const ArmModel& m, const JointVector& q) {
  Eigen::Matrix4d t = m.base.matrix();
  for (int i = 0; i < kArmDof; ++i) t = t * m.joints[i].origin.matrix() * rodrigues(m.joints[i].axis, q[i]);
  return t * m.tool.matrix();
}

Vec3 log_rotation_delta(const Mat3& plus, const Mat3& minus) { return rotation_log(plus * minus.transpose()); }

}  // namespace

TEST_CASE("forward kinematics at zero is the composition of static offsets") {
  const ArmModel m = make_reference_arm(make_transform({0.1, 0.2, 0.3}, {0.0, 0.0, 0.0}), 0.12);
  const Pose6 p = forward_kinematics(m, JointVector::Zero());
  const double reach = 0.11 + 0.20 + 0.20 + 0.20 + 0.20 + 0.19 + 0.078 + 0.12;
  CHECK((p.position - Vec3(0.1, 0.2, 0.3 + reach)).norm() < 1e-12);
  CHECK(p.rpy.norm() < 1e-12);
}

TEST_CASE("wrist roll leaves the tool position unchanged when the tool lies on its axis") {
  const ArmModel m = make_reference_pair().cutting;
  std::mt19937_64 rng(1);
  JointVector q = random_configuration(m, rng);
  const Vec3 p0 = forward_kinematics(m, q).position;
  q[6] += 1.3;
  CHECK((forward_kinematics(m, q).position - p0).norm() < 1e-12);
}

TEST_CASE("forward kinematics matches the matrix-chain oracle") {
  const DualArmModels pair = make_reference_pair();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const JointVector q = random_configuration(pair.cutting, rng);
    const Eigen::Matrix4d oracle = chain_oracle(pair.cutting, q);
    const Eigen::Isometry3d t = tool_transform(pair.cutting, q);
    CHECK((t.translation() - oracle.topRightCorner<3, 1>()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((t.linear() - oracle.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("forward kinematics rejects non-finite input") {
  const ArmModel m = make_reference_pair().cutting;
  JointVector q = JointVector::Zero();
  q[3] = std::nan("");
  CHECK_THROWS_AS(forward_kinematics(m, q), KinematicsError);
}

TEST_CASE("geometric Jacobian agrees with central finite differences") {
  const ArmModel m = make_reference_pair().cutting;
  std::mt19937_64 rng(3);
  constexpr double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const JointVector q = random_configuration(m, rng);
    const Jacobian6x7 j = geometric_jacobian(m, q);
    Jacobian6x7 fd;
    for (int c = 0; c < kArmDof; ++c) {
      JointVector qp = q, qm = q;
      qp[c] += h;
      qm[c] -= h;
      const auto tp = tool_transform(m, qp);
      const auto tm = tool_transform(m, qm);
      fd.block<3, 1>(0, c) = (tp.translation() - tm.translation()) / (2 * h);
      fd.block<3, 1>(3, c) = log_rotation_delta(tp.linear(), tm.linear()) / (2 * h);
    }
    CHECK((j - fd).cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("straight arm is singular") {
  const ArmModel m = make_reference_pair().cutting;
  const Jacobian6x7 j = geometric_jacobian(m, JointVector::Zero());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  CHECK(svd.singularValues()[5] < 1e-12);
  CHECK(svd.rank() < 6);
}

TEST_CASE("zero joint velocity gives zero twist") {
  const ArmModel m = make_reference_pair().cutting;
  std::mt19937_64 rng(4);
  const JointVector q = random_configuration(m, rng);
  CHECK((geometric_jacobian(m, q) * JointVector::Zero()).norm() == 0.0);
}

TEST_CASE("point Jacobian ignores joints beyond the carrying link") {
  const ArmModel m = make_reference_pair().cutting;
  std::mt19937_64 rng(5);
  const JointVector q = random_configuration(m, rng);
  const ArmFrames f = compute_frames(m, q);
  const Vec3 local(0.02, -0.01, 0.15);
  const Vec3 p = f.link[3] * local;
  const auto jp = point_jacobian(f, 3, p);
  CHECK(jp.rightCols(3).norm() == 0.0);
  constexpr double h = 1e-6;
  for (int c = 0; c < kArmDof; ++c) {
    JointVector qp = q, qm = q;
    qp[c] += h;
    qm[c] -= h;
    const Vec3 fd = (compute_frames(m, qp).link[3] * local - compute_frames(m, qm).link[3] * local) / (2 * h);
    CHECK((jp.col(c) - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("absolute task structure") {
  const DualArmModels pair = make_reference_pair();
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    DualArmState s;
    s.q << random_configuration(pair.cutting, rng), random_configuration(pair.collecting, rng);
    const TaskKinematics abs = absolute_task(pair, s);
    CHECK(abs.jacobian.rightCols<kArmDof>().norm() == 0.0);
    CHECK((abs.pose.matrix() - tool_transform(pair.cutting, s.cutting()).matrix()).norm() < 1e-14);
    DualJointVector qdot = DualJointVector::Zero();
    qdot.tail<kArmDof>().setRandom();
    CHECK((abs.jacobian * qdot).norm() == 0.0);
  }
}

TEST_CASE("relative task: coincident tools give identity") {
  DualArmModels pair = make_reference_pair();
  pair.collecting.base = pair.cutting.base;
  pair.collecting.tool = pair.cutting.tool;
  DualArmState s;
  s.q.head<kArmDof>() << 0.1, 0.5, -0.2, 1.0, 0.3, -0.4, 0.2;
  s.q.tail<kArmDof>() = s.q.head<kArmDof>();
  const TaskKinematics rel = relative_task(pair, s);
  CHECK((rel.pose.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("relative Jacobian agrees with finite differences of the relative pose") {
  const DualArmModels pair = make_reference_pair();
  std::mt19937_64 rng(7);
  constexpr double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    DualArmState s;
    s.q << random_configuration(pair.cutting, rng), random_configuration(pair.collecting, rng);
    const TaskKinematics rel = relative_task(pair, s);
    Jacobian6x14 fd;
    for (int c = 0; c < kDualDof; ++c) {
      DualArmState sp = s, sm = s;
      sp.q[c] += h;
      sm.q[c] -= h;
      const auto tp = relative_task(pair, sp).pose;
      const auto tm = relative_task(pair, sm).pose;
      fd.block<3, 1>(0, c) = (tp.translation() - tm.translation()) / (2 * h);
      fd.block<3, 1>(3, c) = log_rotation_delta(tp.linear(), tm.linear()) / (2 * h);
    }
    CHECK((rel.jacobian - fd).cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("frozen cutting arm: relative twist is the collecting twist seen from the cutting tool") {
  const DualArmModels pair = make_reference_pair();
  std::mt19937_64 rng(8);
  DualArmState s;
  s.q << random_configuration(pair.cutting, rng), random_configuration(pair.collecting, rng);
  const TaskKinematics rel = relative_task(pair, s);
  const Mat3 ra = tool_transform(pair.cutting, s.cutting()).linear();
  const Jacobian6x7 jb = geometric_jacobian(pair.collecting, s.collecting());
  DualJointVector qdot = DualJointVector::Zero();
  qdot.tail<kArmDof>() << 0.3, -0.2, 0.5, 0.1, -0.4, 0.25, 0.6;
  const Vec6 twist = rel.jacobian * qdot;
  const Vec6 world = jb * qdot.tail<kArmDof>();
  CHECK((twist.head<3>() - ra.transpose() * world.head<3>()).norm() < 1e-12);
  CHECK((twist.tail<3>() - ra.transpose() * world.tail<3>()).norm() < 1e-12);
}

TEST_CASE("masked rows are dropped") {
  Eigen::MatrixXd j = Eigen::MatrixXd::Random(6, 14);
  const std::array<bool, 6> mask{true, true, true, true, false, true};
  const Eigen::MatrixXd s = select_rows(j, mask);
  CHECK(s.rows() == 5);
  CHECK((s.row(4) - j.row(5)).norm() == 0.0);
}

TEST_CASE("arm model validation") {
  ArmModel m = make_reference_pair().cutting;
  CHECK_NOTHROW(m.validate());
  m.joints[2].lower = m.joints[2].upper;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = make_reference_pair().cutting;
  m.joints[4].max_velocity = 0.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
