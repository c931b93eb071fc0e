#pragma once

#include <optional>

#include "harvest/geometry.hpp"

namespace harvest {

struct CameraIntrinsics {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  bool valid() const;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

/// Axis-aligned detection box in pixel coordinates, top-left and bottom-right corners.
struct BoundingBox {
  double u_tl = 0.0;
  double v_tl = 0.0;
  double u_br = 0.0;
  double v_br = 0.0;

  double width() const { return u_br - u_tl; }
  double height() const { return v_br - v_tl; }
  double area() const { return width() * height(); }
  bool valid() const { return u_tl < u_br && v_tl < v_br; }
  bool inside(const CameraIntrinsics& k) const;
};

double iou(const BoundingBox& a, const BoundingBox& b);

PixelPoint bbox_center(const BoundingBox& b);

/// r_h = u_br - u_c, r_v = v_br - v_c
PixelPoint bbox_semi_axes(const BoundingBox& b);

/// Pinhole deprojection. nullopt for a zero, negative or non-finite depth.
std::optional<Vec3> proj(double u, double v, double depth, const CameraIntrinsics& k);

/// Pinhole projection of a camera-frame point with z > 0.
PixelPoint project(const Vec3& p, const CameraIntrinsics& k);

}  // namespace harvest
