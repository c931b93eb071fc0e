#include "harvest/perception.hpp"

#include <algorithm>
#include <cmath>

namespace harvest {

std::optional<double> fruit_reference_depth(const BoundingBox& b, const Frame& frame) {
  const PixelPoint c = bbox_center(b);
  const int u = static_cast<int>(std::lround(c.u));
  const int v = static_cast<int>(std::lround(c.v));
  auto usable = [](float d) { return std::isfinite(d) && d > 0.0f; };
  if (u >= 0 && v >= 0 && u < frame.width && v < frame.height && usable(frame.depth_at(u, v))) {
    return frame.depth_at(u, v);
  }
  // central 25% of the area: half the width and half the height
  const int u0 = std::max(0, static_cast<int>(std::ceil(c.u - b.width() / 4.0)));
  const int u1 = std::min(frame.width - 1, static_cast<int>(std::floor(c.u + b.width() / 4.0)));
  const int v0 = std::max(0, static_cast<int>(std::ceil(c.v - b.height() / 4.0)));
  const int v1 = std::min(frame.height - 1, static_cast<int>(std::floor(c.v + b.height() / 4.0)));
  std::vector<float> valid;
  for (int y = v0; y <= v1; ++y) {
    for (int x = u0; x <= u1; ++x) {
      if (usable(frame.depth_at(x, y))) valid.push_back(frame.depth_at(x, y));
    }
  }
  if (valid.empty()) return std::nullopt;
  const size_t mid = valid.size() / 2;
  std::nth_element(valid.begin(), valid.begin() + mid, valid.end());
  if (valid.size() % 2 == 1) return valid[mid];
  const float upper = valid[mid];
  const float lower = *std::max_element(valid.begin(), valid.begin() + mid);
  return 0.5 * (static_cast<double>(lower) + upper);
}

std::optional<FruitEstimate> localize_fruit(const BoundingBox& b, const Frame& frame, const CameraIntrinsics& k) {
  if (!b.valid()) return std::nullopt;
  const auto z_min = fruit_reference_depth(b, frame);
  if (!z_min) return std::nullopt;
  const PixelPoint c = bbox_center(b);
  const PixelPoint r = bbox_semi_axes(b);
  const Vec3 pc = *proj(c.u, c.v, *z_min, k);
  const Vec3 ph = *proj(c.u + r.u, c.v, *z_min, k);
  const Vec3 pv = *proj(c.u, c.v + r.v, *z_min, k);
  FruitEstimate e;
  e.d_h = (ph - pc).norm();
  e.d_v = (pv - pc).norm();
  const double z_f = *z_min + e.d_h;
  e.center = *proj(c.u, c.v, z_f, k);
  e.cam_distance = e.center.norm();
  e.last_seen = frame.index;
  return e;
}

std::optional<TreeEstimate> localize_tree(const Frame& frame, const CameraIntrinsics& k, const TreeParams& p,
                                          std::vector<std::uint8_t>* mask) {
  if (!frame.consistent()) return std::nullopt;
  TreeMaskArgs args;
  args.rgb = frame.rgb.data();
  args.depth = frame.depth.data();
  args.width = frame.width;
  args.height = frame.height;
  args.range = p.hsv;
  args.depth_max = static_cast<float>(p.depth_max);
  if (mask) {
    mask->assign(frame.depth.size(), 0);
    args.mask = mask->data();
  }
  const MaskStats st = kernels::tree_mask(args);
  if (st.count < p.min_pixels || st.count == 0) return std::nullopt;
  const double n = static_cast<double>(st.count);
  const double z = st.sum_depth / n;
  TreeEstimate t;
  t.center = *proj(static_cast<double>(st.sum_u) / n, static_cast<double>(st.sum_v) / n, z, k);
  t.pixel_count = st.count;
  return t;
}

FruitRegistry::FruitRegistry(RegistryParams params) : params_(params) {}

void FruitRegistry::update(const std::vector<FruitEstimate>& observed, std::int64_t frame) {
  for (const FruitEstimate& e : observed) {
    auto it = entries_.find(e.id);
    if (it == entries_.end()) {
      FruitEstimate stored = e;
      stored.last_seen = frame;
      entries_.emplace(e.id, stored);
      continue;
    }
    if ((e.center - it->second.center).norm() < params_.jump_threshold) {
      it->second = e;
    }
    it->second.last_seen = frame;
  }
}

void FruitRegistry::expire(std::int64_t frame) {
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (frame - it->second.last_seen > params_.stale_frames) {
      it = entries_.erase(it);
    } else {
      ++it;
    }
  }
}

std::optional<FruitEstimate> FruitRegistry::select(const std::set<int>& excluded) const {
  std::optional<FruitEstimate> best;
  for (const auto& [id, e] : entries_) {
    if (excluded.count(id)) continue;
    if (!best || e.cam_distance < best->cam_distance) best = e;
  }
  return best;
}

std::vector<FruitEstimate> FruitRegistry::entries() const {
  std::vector<FruitEstimate> out;
  out.reserve(entries_.size());
  for (const auto& kv : entries_) out.push_back(kv.second);
  return out;
}

std::optional<FruitEstimate> FruitRegistry::find(int id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<FruitEstimate> select_fruit(FruitRegistry& registry, const std::vector<FruitEstimate>& observed,
                                          std::int64_t frame, const std::set<int>& excluded) {
  registry.update(observed, frame);
  registry.expire(frame);
  return registry.select(excluded);
}

void SnapshotBuffer::publish(std::shared_ptr<const PerceptionSnapshot> s) {
  std::lock_guard<std::mutex> lock(mutex_);
  latest_ = std::move(s);
}

std::shared_ptr<const PerceptionSnapshot> SnapshotBuffer::latest() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return latest_;
}

PerceptionPipeline::PerceptionPipeline(CameraIntrinsics k, PerceptionParams params)
    : k_(k), params_(params), tracker_(params.tracker), registry_(params.registry) {}

PerceptionSnapshot PerceptionPipeline::process(const Frame& frame, const std::vector<BoundingBox>& detections) {
  ++processed_;
  stats_ = {};
  stats_.detections = static_cast<int>(detections.size());
  const std::vector<TrackedBox> tracked = tracker_.update(detections);
  stats_.confirmed = static_cast<int>(tracked.size());
  std::vector<FruitEstimate> observed;
  for (const TrackedBox& t : tracked) {
    auto e = localize_fruit(t.box, frame, k_);
    if (!e) continue;
    e->id = t.id;
    observed.push_back(*e);
  }
  stats_.localized = static_cast<int>(observed.size());
  registry_.update(observed, frame.index);
  registry_.expire(frame.index);
  if (auto tree = localize_tree(frame, k_, params_.tree)) last_tree_ = tree;

  PerceptionSnapshot s;
  s.frame = frame.index;
  s.fruits = registry_.entries();
  s.tree = last_tree_;
  s.warm = processed_ >= params_.tracker.n_init;
  return s;
}

}  // namespace harvest
