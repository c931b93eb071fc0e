#include "harvest/camera.hpp"

#include <algorithm>
#include <cmath>

namespace harvest {

bool CameraIntrinsics::valid() const {
  return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 && cx < width && cy >= 0.0 && cy < height;
}

bool BoundingBox::inside(const CameraIntrinsics& k) const {
  return valid() && u_tl >= 0.0 && v_tl >= 0.0 && u_br <= k.width - 1 && v_br <= k.height - 1;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.u_br, b.u_br) - std::max(a.u_tl, b.u_tl);
  const double h = std::min(a.v_br, b.v_br) - std::max(a.v_tl, b.v_tl);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double inter = w * h;
  return inter / (a.area() + b.area() - inter);
}

PixelPoint bbox_center(const BoundingBox& b) { return {(b.u_tl + b.u_br) / 2.0, (b.v_tl + b.v_br) / 2.0}; }

PixelPoint bbox_semi_axes(const BoundingBox& b) {
  const PixelPoint c = bbox_center(b);
  return {b.u_br - c.u, b.v_br - c.v};
}

std::optional<Vec3> proj(double u, double v, double depth, const CameraIntrinsics& k) {
  if (!(depth > 0.0) || !std::isfinite(depth)) return std::nullopt;
  return Vec3((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth);
}

PixelPoint project(const Vec3& p, const CameraIntrinsics& k) {
  return {k.cx + k.fx * p.x() / p.z(), k.cy + k.fy * p.y() / p.z()};
}

}  // namespace harvest
