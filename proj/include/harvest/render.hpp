#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "harvest/camera.hpp"
#include "harvest/image.hpp"

namespace harvest {

/// Vertical (camera y) cylinder of unbounded height.
struct SceneTrunk {
  Vec3 axis_point = Vec3(0.0, 0.0, 1.0);
  double radius = 0.08;
  Rgb color{120, 96, 73};
};

/// Ellipsoid with semi-axes (d_h, d_v, d_h) along the camera axes.
struct SceneFruit {
  std::string name;
  Vec3 center = Vec3(0.0, 0.0, 0.5);
  double d_h = 0.04;
  double d_v = 0.04;
  Rgb color{230, 120, 20};
};

/// Axis-aligned box, e.g. foliage in front of a fruit.
struct SceneBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Rgb color{40, 110, 40};
};

struct SceneBackground {
  Rgb color{60, 130, 50};
  double depth = 3.0;
};

struct SceneDescription {
  std::optional<SceneTrunk> trunk;
  std::vector<SceneFruit> fruits;
  std::vector<SceneBox> occluders;
  SceneBackground background;
  double depth_noise = 0.0;  ///< standard deviation, m
};

/// Ground-truth detection of one scene fruit.
struct Detection {
  BoundingBox box;
  int fruit = -1;  ///< index into SceneDescription::fruits
  double visible_fraction = 0.0;
};

struct RenderOutput {
  Frame frame;
  std::vector<Detection> detections;
};

/// Z-buffered ray cast. A fruit yields a detection when its box lies inside the
/// image and at least half of its silhouette is unoccluded. The box is centered
/// on the projected fruit center with half extents f * semi-axis / z_near, where
/// z_near is the depth of the surface hit along the center ray.
RenderOutput render_synthetic_frame(const SceneDescription& scene, const CameraIntrinsics& k, std::int64_t index = 0,
                                    std::uint64_t seed = 0);

/// Depth along the camera ray through (u, v) to the first surface of the fruit, if any.
std::optional<double> ray_hit_depth(const SceneFruit& f, double u, double v, const CameraIntrinsics& k);
std::optional<double> ray_hit_depth(const SceneTrunk& t, double u, const CameraIntrinsics& k);

}  // namespace harvest
