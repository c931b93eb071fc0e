#include "harvest/kinematics.hpp"

#include <cmath>
#include <sstream>

namespace harvest {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace

void ArmModel::validate() const {
  for (int i = 0; i < kArmDof; ++i) {
    const auto& j = joints[i];
    std::ostringstream where;
    where << name << ".joints[" << i << "]";
    if (!(j.lower < j.upper)) throw std::invalid_argument(where.str() + ": lower limit must be < upper limit");
    if (!(j.max_velocity > 0.0)) throw std::invalid_argument(where.str() + ": max_velocity must be > 0");
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) throw std::invalid_argument(where.str() + ": axis must be unit length");
  }
  for (std::size_t c = 0; c < capsules.size(); ++c) {
    const auto& cap = capsules[c];
    std::ostringstream where;
    where << name << ".capsules[" << c << "]";
    if (cap.link < 0 || cap.link > LinkCapsule::kToolLink)
      throw std::invalid_argument(where.str() + ": link index out of range");
    if (!(cap.radius > 0.0)) throw std::invalid_argument(where.str() + ": radius must be > 0");
  }
}

bool ArmModel::within_limits(const JointVector& q, double tol) const {
  for (int i = 0; i < kArmDof; ++i) {
    if (q[i] < joints[i].lower - tol || q[i] > joints[i].upper + tol) return false;
  }
  return true;
}

ArmFrames compute_frames(const ArmModel& model, const JointVector& q) {
  if (!q.allFinite()) throw KinematicsError("joint vector contains non-finite values");
  ArmFrames f;
  Eigen::Isometry3d t = model.base;
  for (int i = 0; i < kArmDof; ++i) {
    const auto& j = model.joints[i];
    t = t * j.origin;
    f.origin_world[i] = t.translation();
    f.axis_world[i] = t.linear() * j.axis;
    t = t * Eigen::AngleAxisd(q[i], j.axis);
    f.link[i] = t;
  }
  f.tool = t * model.tool;
  return f;
}

Eigen::Isometry3d tool_transform(const ArmModel& model, const JointVector& q) {
  return compute_frames(model, q).tool;
}

Pose6 forward_kinematics(const ArmModel& model, const JointVector& q) {
  return Pose6::from_isometry(tool_transform(model, q));
}

Eigen::Matrix<double, 3, kArmDof> point_jacobian(const ArmFrames& frames, int link_index, const Vec3& p_world) {
  Eigen::Matrix<double, 3, kArmDof> j = Eigen::Matrix<double, 3, kArmDof>::Zero();
  const int last = std::min(link_index, kArmDof - 1);
  for (int i = 0; i <= last; ++i) {
    j.col(i) = frames.axis_world[i].cross(p_world - frames.origin_world[i]);
  }
  return j;
}

Jacobian6x7 geometric_jacobian(const ArmFrames& frames) {
  Jacobian6x7 j;
  const Vec3 p = frames.tool.translation();
  for (int i = 0; i < kArmDof; ++i) {
    j.block<3, 1>(0, i) = frames.axis_world[i].cross(p - frames.origin_world[i]);
    j.block<3, 1>(3, i) = frames.axis_world[i];
  }
  return j;
}

Jacobian6x7 geometric_jacobian(const ArmModel& model, const JointVector& q) {
  return geometric_jacobian(compute_frames(model, q));
}

TaskKinematics absolute_task(const DualArmModels& models, const DualArmState& state) {
  const ArmFrames f = compute_frames(models.cutting, state.cutting());
  TaskKinematics out;
  out.pose = f.tool;
  out.jacobian.leftCols<kArmDof>() = geometric_jacobian(f);
  return out;
}

TaskKinematics relative_task(const DualArmModels& models, const DualArmState& state) {
  const ArmFrames fa = compute_frames(models.cutting, state.cutting());
  const ArmFrames fb = compute_frames(models.collecting, state.collecting());
  const Jacobian6x7 ja = geometric_jacobian(fa);
  const Jacobian6x7 jb = geometric_jacobian(fb);
  const Mat3 ra_t = fa.tool.linear().transpose();
  const Vec3 d = fb.tool.translation() - fa.tool.translation();

  TaskKinematics out;
  out.pose = fa.tool.inverse() * fb.tool;
  // p_r = Ra^T (p_b - p_a):  p_r' = Ra^T (v_b - v_a + [d]x w_a)
  // w_r = Ra^T (w_b - w_a)
  out.jacobian.block<3, kArmDof>(0, 0) = ra_t * (-ja.topRows<3>() + skew(d) * ja.bottomRows<3>());
  out.jacobian.block<3, kArmDof>(3, 0) = -ra_t * ja.bottomRows<3>();
  out.jacobian.block<3, kArmDof>(0, kArmDof) = ra_t * jb.topRows<3>();
  out.jacobian.block<3, kArmDof>(3, kArmDof) = ra_t * jb.bottomRows<3>();
  return out;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::array<bool, 6>& mask) {
  int rows = 0;
  for (bool b : mask) rows += b ? 1 : 0;
  Eigen::MatrixXd out(rows, m.cols());
  int r = 0;
  for (int i = 0; i < 6; ++i) {
    if (mask[i]) out.row(r++) = m.row(i);
  }
  return out;
}

Eigen::VectorXd select_rows(const Vec6& v, const std::array<bool, 6>& mask) {
  int rows = 0;
  for (bool b : mask) rows += b ? 1 : 0;
  Eigen::VectorXd out(rows);
  int r = 0;
  for (int i = 0; i < 6; ++i) {
    if (mask[i]) out[r++] = v[i];
  }
  return out;
}

}  // namespace harvest
