#include "harvest/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace harvest {

double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

Mat3 rotation_from_rpy(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()))
      .toRotationMatrix();
}

Vec3 rpy_from_rotation(const Mat3& r) {
  const double s = std::clamp(r(0, 2), -1.0, 1.0);
  const double cp = std::hypot(r(0, 0), r(0, 1));
  const double pitch = std::atan2(s, cp);
  double roll = 0.0;
  double yaw = 0.0;
  if (cp > 1e-9) {
    roll = std::atan2(-r(1, 2), r(2, 2));
    yaw = std::atan2(-r(0, 1), r(0, 0));
  } else {
    yaw = std::atan2(r(1, 0), r(1, 1));
  }
  return {normalize_angle(roll), normalize_angle(pitch), normalize_angle(yaw)};
}

Vec3 rotation_log(const Mat3& r) {
  const double c = (r.trace() - 1.0) * 0.5;
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double angle = std::atan2(0.5 * w.norm(), c);
  if (angle < 1e-6) {
    // first-order expansion; exact enough below 1e-6 rad
    return 0.5 * w;
  }
  if (std::numbers::pi - angle < 1e-3) {
    Eigen::AngleAxisd aa(r);
    return aa.angle() * aa.axis();
  }
  return (angle / (2.0 * std::sin(angle))) * w;
}

Pose6::Pose6(const Vec3& p, const Vec3& angles, std::array<bool, 6> m) : position(p), mask(m) {
  for (int i = 0; i < 3; ++i) rpy[i] = normalize_angle(angles[i]);
}

Pose6 Pose6::from_isometry(const Eigen::Isometry3d& t) {
  Pose6 out;
  out.position = t.translation();
  out.rpy = rpy_from_rotation(t.linear());
  return out;
}

Eigen::Isometry3d Pose6::isometry() const {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = rotation();
  t.translation() = position;
  return t;
}

int Pose6::constrained_count() const {
  return static_cast<int>(std::count(mask.begin(), mask.end(), true));
}

Vec6 pose_error(const Pose6& current, const Pose6& desired) {
  Vec6 e;
  e.head<3>() = desired.position - current.position;
  e.tail<3>() = rotation_log(desired.rotation() * current.rotation().transpose());
  for (int i = 0; i < 6; ++i) {
    if (!desired.mask[i]) e[i] = 0.0;
  }
  return e;
}

bool Cylinder::valid() const {
  return radius > 0.0 && std::abs(axis_direction.norm() - 1.0) <= 1e-9;
}

double dist_point_cylinder(const Vec3& p, const Cylinder& c) {
  const Vec3 d = p - c.axis_point;
  const Vec3 radial = d - d.dot(c.axis_direction) * c.axis_direction;
  return radial.norm() - c.radius;
}

Vec3 closest_point_on_segment(const Vec3& p, const Segment& s) {
  const Vec3 ab = s.b - s.a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return s.a;
  const double t = std::clamp((p - s.a).dot(ab) / len2, 0.0, 1.0);
  return s.a + t * ab;
}

Witness closest_points_segment_segment(const Segment& s1, const Segment& s2) {
  constexpr double kEps = 1e-14;
  const Vec3 d1 = s1.b - s1.a;
  const Vec3 d2 = s2.b - s2.a;
  const Vec3 r = s1.a - s2.a;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0;
  double t = 0.0;

  if (a <= kEps && e <= kEps) {
    // both degenerate to points
  } else if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      // parallel segments: any s works, pick 0 and let the clamps below fix t
      s = denom > kEps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  Witness w;
  w.on_first = s1.a + s * d1;
  w.on_second = s2.a + t * d2;
  w.distance = (w.on_first - w.on_second).norm();
  return w;
}

double dist_segment_segment(const Segment& s1, const Segment& s2) {
  return closest_points_segment_segment(s1, s2).distance;
}

Witness closest_points_segment_line(const Segment& s, const Vec3& line_point, const Vec3& line_dir) {
  // Distance to the line restricted to the segment is convex in the segment
  // parameter; minimize the squared radial distance in closed form.
  const Vec3 d = s.b - s.a;
  const Vec3 r = s.a - line_point;
  const Vec3 d_perp = d - d.dot(line_dir) * line_dir;
  const Vec3 r_perp = r - r.dot(line_dir) * line_dir;
  const double den = d_perp.squaredNorm();
  double t = 0.0;
  if (den > 1e-14) t = std::clamp(-r_perp.dot(d_perp) / den, 0.0, 1.0);
  Witness w;
  w.on_first = s.a + t * d;
  const Vec3 rel = w.on_first - line_point;
  w.on_second = line_point + rel.dot(line_dir) * line_dir;
  w.distance = (w.on_first - w.on_second).norm();
  return w;
}

double dist_point_ellipsoid(const Vec3& p, const Ellipsoid& e) {
  return (p - e.center).norm() - e.bounding_radius();
}

}  // namespace harvest
