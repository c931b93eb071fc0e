#pragma once

#include <array>
#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace harvest {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

/// Rotation for roll/pitch/yaw composed intrinsically: R = Rx(roll) * Ry(pitch) * Rz(yaw).
Mat3 rotation_from_rpy(const Vec3& rpy);

/// Inverse of rotation_from_rpy. At pitch = +-pi/2 roll is set to 0 and the
/// remaining angle is folded into yaw; the rotation is still reproduced exactly.
Vec3 rpy_from_rotation(const Mat3& r);

/// Angle-axis vector (angle * unit axis) of a rotation matrix; norm in [0, pi].
Vec3 rotation_log(const Mat3& r);

/// Position (m) + roll/pitch/yaw (rad) with a per-component constraint mask.
/// Mask order is x, y, z, roll, pitch, yaw; `false` marks an unconstrained component.
struct Pose6 {
  Vec3 position = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();
  std::array<bool, 6> mask{true, true, true, true, true, true};

  Pose6() = default;
  Pose6(const Vec3& p, const Vec3& angles, std::array<bool, 6> m = {true, true, true, true, true, true});

  static Pose6 from_isometry(const Eigen::Isometry3d& t);

  Mat3 rotation() const { return rotation_from_rpy(rpy); }
  Eigen::Isometry3d isometry() const;
  int constrained_count() const;
};

/// Six-vector error (desired - current). The orientation part is the angle-axis
/// vector of R_desired * R_current^T. Components masked out in `desired` are zeroed.
Vec6 pose_error(const Pose6& current, const Pose6& desired);

/// Infinite cylinder.
struct Cylinder {
  Vec3 axis_point = Vec3::Zero();
  Vec3 axis_direction = Vec3::UnitY();
  double radius = 0.0;

  bool valid() const;
};

/// Fruit ellipsoid with semi-axes (d_h, d_v, d_h) along the camera axes.
struct Ellipsoid {
  Vec3 center = Vec3::Zero();
  double d_h = 0.0;
  double d_v = 0.0;

  bool valid() const { return d_h > 0.0 && d_v > 0.0; }
  double bounding_radius() const { return std::max(d_h, d_v); }
  Vec3 semi_axes() const { return {d_h, d_v, d_h}; }
};

struct Segment {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
};

struct Capsule {
  Segment segment;
  double radius = 0.0;
};

/// Closest-point pair between two primitives' core sets.
struct Witness {
  Vec3 on_first = Vec3::Zero();
  Vec3 on_second = Vec3::Zero();
  double distance = 0.0;
};

/// Radial distance from the axis line minus the radius; negative inside.
double dist_point_cylinder(const Vec3& p, const Cylinder& c);

Witness closest_points_segment_segment(const Segment& s1, const Segment& s2);
double dist_segment_segment(const Segment& s1, const Segment& s2);

/// Closest points between a segment and an infinite line (point + unit direction).
Witness closest_points_segment_line(const Segment& s, const Vec3& line_point, const Vec3& line_dir);

/// Closest point on a segment to p.
Vec3 closest_point_on_segment(const Vec3& p, const Segment& s);

/// Distance to the bounding sphere of radius max(d_h, d_v). Never larger than the
/// true distance to the ellipsoid.
double dist_point_ellipsoid(const Vec3& p, const Ellipsoid& e);

}  // namespace harvest
