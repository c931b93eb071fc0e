#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "harvest/geometry.hpp"

namespace harvest {

inline constexpr int kArmDof = 7;
inline constexpr int kDualDof = 2 * kArmDof;

using JointVector = Eigen::Matrix<double, kArmDof, 1>;
using DualJointVector = Eigen::Matrix<double, kDualDof, 1>;
using Jacobian6x7 = Eigen::Matrix<double, 6, kArmDof>;
using Jacobian6x14 = Eigen::Matrix<double, 6, kDualDof>;

/// Revolute joint: fixed origin transform from the previous frame, then a rotation about `axis`.
struct JointDescriptor {
  Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();
  Vec3 axis = Vec3::UnitZ();
  double lower = 0.0;
  double upper = 0.0;
  double max_velocity = 0.0;
};

/// Link collision capsule. `link` is the index of the joint whose motion carries
/// the capsule (0..6), or kToolLink for the tool frame. Endpoints are local.
struct LinkCapsule {
  static constexpr int kToolLink = kArmDof;
  std::string name;
  int link = 0;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
  bool self_collision = true;
  bool environment = true;
};

struct ArmModel {
  std::string name;
  Eigen::Isometry3d base = Eigen::Isometry3d::Identity();
  Eigen::Isometry3d tool = Eigen::Isometry3d::Identity();
  std::array<JointDescriptor, kArmDof> joints{};
  std::vector<LinkCapsule> capsules;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
  bool within_limits(const JointVector& q, double tol = 0.0) const;
};

class KinematicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// World-frame placement of every joint and the tool for one configuration.
struct ArmFrames {
  std::array<Eigen::Isometry3d, kArmDof> link{};  ///< frame after joint i rotation
  std::array<Vec3, kArmDof> axis_world{};
  std::array<Vec3, kArmDof> origin_world{};
  Eigen::Isometry3d tool = Eigen::Isometry3d::Identity();

  const Eigen::Isometry3d& frame_of(int link_index) const {
    return link_index == LinkCapsule::kToolLink ? tool : link[link_index];
  }
};

ArmFrames compute_frames(const ArmModel& model, const JointVector& q);

/// Tool pose in the world (camera) frame. Throws KinematicsError on non-finite q.
Pose6 forward_kinematics(const ArmModel& model, const JointVector& q);
Eigen::Isometry3d tool_transform(const ArmModel& model, const JointVector& q);

/// Geometric Jacobian of the tool: rows are (linear; angular) velocity in the world frame.
Jacobian6x7 geometric_jacobian(const ArmModel& model, const JointVector& q);
Jacobian6x7 geometric_jacobian(const ArmFrames& frames);

/// Linear-velocity Jacobian of a world point rigidly attached to `link_index`.
Eigen::Matrix<double, 3, kArmDof> point_jacobian(const ArmFrames& frames, int link_index, const Vec3& p_world);

struct DualArmModels {
  ArmModel cutting;     ///< absolute-task arm, joints 0..6 of the dual state
  ArmModel collecting;  ///< joints 7..13
};

struct DualArmState {
  DualJointVector q = DualJointVector::Zero();

  JointVector cutting() const { return q.head<kArmDof>(); }
  JointVector collecting() const { return q.tail<kArmDof>(); }
};

struct TaskKinematics {
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  Jacobian6x14 jacobian = Jacobian6x14::Zero();
};

/// Cutting-tool pose in the world frame; Jacobian = [J_cutting | 0].
TaskKinematics absolute_task(const DualArmModels& models, const DualArmState& state);

/// Collecting-tool pose in the cutting-tool frame and its Jacobian. Twist rows are
/// (linear; angular) expressed in the cutting-tool frame.
TaskKinematics relative_task(const DualArmModels& models, const DualArmState& state);

/// Drops rows whose mask entry is false.
Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::array<bool, 6>& mask);
Eigen::VectorXd select_rows(const Vec6& v, const std::array<bool, 6>& mask);

}  // namespace harvest
