#include "harvest/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace harvest {

namespace {

constexpr int kBackground = -1;
constexpr int kTrunk = -2;

struct PixelRect {
  int u0 = 0, u1 = -1, v0 = 0, v1 = -1;
  bool empty() const { return u1 < u0 || v1 < v0; }
};

PixelRect clamp_rect(double u0, double u1, double v0, double v1, const CameraIntrinsics& k) {
  PixelRect r;
  r.u0 = std::max(0, static_cast<int>(std::floor(u0)));
  r.u1 = std::min(k.width - 1, static_cast<int>(std::ceil(u1)));
  r.v0 = std::max(0, static_cast<int>(std::floor(v0)));
  r.v1 = std::min(k.height - 1, static_cast<int>(std::ceil(v1)));
  return r;
}

// Conservative screen rectangle of a sphere in front of the camera.
PixelRect sphere_rect(const Vec3& c, double rho, const CameraIntrinsics& k) {
  const double zn = c.z() - rho;
  if (zn <= 1e-6) return clamp_rect(0, k.width - 1, 0, k.height - 1, k);
  const double zf = c.z() + rho;
  auto span = [&](double x, double f, double center) {
    const double a = (x - rho) / zn, b = (x - rho) / zf, cc = (x + rho) / zn, d = (x + rho) / zf;
    return std::pair{center + f * std::min({a, b, cc, d}), center + f * std::max({a, b, cc, d})};
  };
  const auto [u0, u1] = span(c.x(), k.fx, k.cx);
  const auto [v0, v1] = span(c.y(), k.fy, k.cy);
  return clamp_rect(u0 - 1, u1 + 1, v0 - 1, v1 + 1, k);
}

PixelRect box_rect(const SceneBox& b, const CameraIntrinsics& k) {
  if (b.min.z() <= 1e-6) return clamp_rect(0, k.width - 1, 0, k.height - 1, k);
  double u0 = std::numeric_limits<double>::infinity(), u1 = -u0, v0 = u0, v1 = -u0;
  for (int i = 0; i < 8; ++i) {
    const Vec3 p((i & 1) ? b.max.x() : b.min.x(), (i & 2) ? b.max.y() : b.min.y(), (i & 4) ? b.max.z() : b.min.z());
    const PixelPoint q = project(p, k);
    u0 = std::min(u0, q.u);
    u1 = std::max(u1, q.u);
    v0 = std::min(v0, q.v);
    v1 = std::max(v1, q.v);
  }
  return clamp_rect(u0 - 1, u1 + 1, v0 - 1, v1 + 1, k);
}

std::optional<double> ray_box(const SceneBox& b, const Vec3& d) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (0.0 < b.min[i] || 0.0 > b.max[i]) return std::nullopt;
      continue;
    }
    double ta = b.min[i] / d[i], tb = b.max[i] / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 <= 0.0) return std::nullopt;
  return t0;
}

Vec3 ray_direction(double u, double v, const CameraIntrinsics& k) {
  return Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
}

}  // namespace

std::optional<double> ray_hit_depth(const SceneFruit& f, double u, double v, const CameraIntrinsics& k) {
  const Vec3 scale(f.d_h, f.d_v, f.d_h);
  const Vec3 d = ray_direction(u, v, k).cwiseQuotient(scale);
  const Vec3 c = f.center.cwiseQuotient(scale);
  const double a = d.squaredNorm();
  const double b = -2.0 * d.dot(c);
  const double cc = c.squaredNorm() - 1.0;
  if (cc <= 0.0) return std::nullopt;
  const double disc = b * b - 4.0 * a * cc;
  if (disc < 0.0) return std::nullopt;
  const double t = (-b - std::sqrt(disc)) / (2.0 * a);
  if (t <= 0.0) return std::nullopt;
  return t;
}

std::optional<double> ray_hit_depth(const SceneTrunk& tr, double u, const CameraIntrinsics& k) {
  const double dx = (u - k.cx) / k.fx;
  const double xt = tr.axis_point.x(), zt = tr.axis_point.z();
  const double a = dx * dx + 1.0;
  const double b = -2.0 * (dx * xt + zt);
  const double c = xt * xt + zt * zt - tr.radius * tr.radius;
  if (c <= 0.0) return std::nullopt;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double t = (-b - std::sqrt(disc)) / (2.0 * a);
  if (t <= 0.0) return std::nullopt;
  return t;
}

RenderOutput render_synthetic_frame(const SceneDescription& scene, const CameraIntrinsics& k, std::int64_t index,
                                    std::uint64_t seed) {
  RenderOutput out;
  Frame& f = out.frame;
  f = Frame(k.width, k.height, index);
  const size_t n = static_cast<size_t>(k.width) * k.height;
  std::vector<int> owner(n, kBackground);
  std::vector<double> zbuf(n, scene.background.depth);

  if (scene.trunk) {
    for (int u = 0; u < k.width; ++u) {
      const auto t = ray_hit_depth(*scene.trunk, u, k);
      if (!t) continue;
      for (int v = 0; v < k.height; ++v) {
        const size_t i = static_cast<size_t>(v) * k.width + u;
        if (*t < zbuf[i]) {
          zbuf[i] = *t;
          owner[i] = kTrunk;
        }
      }
    }
  }

  for (size_t bi = 0; bi < scene.occluders.size(); ++bi) {
    const SceneBox& b = scene.occluders[bi];
    const PixelRect r = box_rect(b, k);
    for (int v = r.v0; v <= r.v1; ++v) {
      for (int u = r.u0; u <= r.u1; ++u) {
        const auto t = ray_box(b, ray_direction(u, v, k));
        const size_t i = static_cast<size_t>(v) * k.width + u;
        if (t && *t < zbuf[i]) {
          zbuf[i] = *t;
          owner[i] = kTrunk - 1 - static_cast<int>(bi);
        }
      }
    }
  }

  std::vector<PixelRect> fruit_rects(scene.fruits.size());
  for (size_t fi = 0; fi < scene.fruits.size(); ++fi) {
    const SceneFruit& fr = scene.fruits[fi];
    const PixelRect r = sphere_rect(fr.center, std::max(fr.d_h, fr.d_v), k);
    fruit_rects[fi] = r;
    for (int v = r.v0; v <= r.v1; ++v) {
      for (int u = r.u0; u <= r.u1; ++u) {
        const auto t = ray_hit_depth(fr, u, v, k);
        const size_t i = static_cast<size_t>(v) * k.width + u;
        if (t && *t < zbuf[i]) {
          zbuf[i] = *t;
          owner[i] = static_cast<int>(fi);
        }
      }
    }
  }

  for (size_t i = 0; i < n; ++i) {
    const int o = owner[i];
    Rgb c = scene.background.color;
    if (o >= 0) {
      c = scene.fruits[o].color;
    } else if (o == kTrunk) {
      c = scene.trunk->color;
    } else if (o < kTrunk) {
      c = scene.occluders[kTrunk - 1 - o].color;
    }
    f.rgb[3 * i] = c.r;
    f.rgb[3 * i + 1] = c.g;
    f.rgb[3 * i + 2] = c.b;
    f.depth[i] = static_cast<float>(zbuf[i]);
  }

  if (scene.depth_noise > 0.0) {
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(index + 1)));
    std::normal_distribution<double> noise(0.0, scene.depth_noise);
    for (size_t i = 0; i < n; ++i) f.depth[i] = static_cast<float>(std::max(1e-4, zbuf[i] + noise(rng)));
  }

  for (size_t fi = 0; fi < scene.fruits.size(); ++fi) {
    const SceneFruit& fr = scene.fruits[fi];
    if (fr.center.z() <= 0.0) continue;
    const PixelRect r = fruit_rects[fi];
    int total = 0, won = 0;
    for (int v = r.v0; v <= r.v1; ++v) {
      for (int u = r.u0; u <= r.u1; ++u) {
        if (!ray_hit_depth(fr, u, v, k)) continue;
        ++total;
        if (owner[static_cast<size_t>(v) * k.width + u] == static_cast<int>(fi)) ++won;
      }
    }
    if (total == 0) continue;
    const PixelPoint c = project(fr.center, k);
    const auto z_near = ray_hit_depth(fr, c.u, c.v, k);
    if (!z_near) continue;
    const double hw = k.fx * fr.d_h / *z_near;
    const double hh = k.fy * fr.d_v / *z_near;
    Detection d;
    d.box = {c.u - hw, c.v - hh, c.u + hw, c.v + hh};
    d.fruit = static_cast<int>(fi);
    d.visible_fraction = static_cast<double>(won) / total;
    if (d.box.inside(k) && d.visible_fraction >= 0.5) out.detections.push_back(d);
  }
  return out;
}

}  // namespace harvest
