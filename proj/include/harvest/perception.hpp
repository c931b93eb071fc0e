#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "harvest/camera.hpp"
#include "harvest/image.hpp"
#include "harvest/kernels.hpp"
#include "harvest/tracker.hpp"

namespace harvest {

struct FruitEstimate {
  int id = -1;
  Vec3 center = Vec3::Zero();  ///< P_f, camera frame
  double d_h = 0.0;
  double d_v = 0.0;
  double cam_distance = 0.0;  ///< |P_f|
  std::int64_t last_seen = 0;
};

struct TreeEstimate {
  Vec3 center = Vec3::Zero();  ///< P_t, camera frame
  std::int64_t pixel_count = 0;
};

/// Center depth from the bbox center pixel, or the median of valid depths in
/// the central quarter of the box when that pixel has none.
std::optional<double> fruit_reference_depth(const BoundingBox& b, const Frame& frame);

/// Ellipsoid estimate from a box and the depth image. nullopt when no valid depth is available.
std::optional<FruitEstimate> localize_fruit(const BoundingBox& b, const Frame& frame, const CameraIntrinsics& k);

struct TreeParams {
  HsvRange hsv;
  double depth_max = 2.0;
  std::int64_t min_pixels = 200;
};

/// Mean pixel and mean depth of the HSV-and-depth mask. nullopt when fewer than min_pixels survive.
std::optional<TreeEstimate> localize_tree(const Frame& frame, const CameraIntrinsics& k, const TreeParams& p,
                                          std::vector<std::uint8_t>* mask = nullptr);

struct RegistryParams {
  double jump_threshold = 0.10;
  std::int64_t stale_frames = 100;
};

/// Per-ID fruit store for target selection.
class FruitRegistry {
 public:
  explicit FruitRegistry(RegistryParams params = {});

  /// Positions move only when the change is below the jump threshold; last_seen is always refreshed.
  void update(const std::vector<FruitEstimate>& observed, std::int64_t frame);
  /// Drops IDs unseen for more than stale_frames.
  void expire(std::int64_t frame);

  /// Smallest cam_distance among IDs not in `excluded`.
  std::optional<FruitEstimate> select(const std::set<int>& excluded = {}) const;

  std::vector<FruitEstimate> entries() const;
  std::optional<FruitEstimate> find(int id) const;
  size_t size() const { return entries_.size(); }

 private:
  RegistryParams params_;
  std::map<int, FruitEstimate> entries_;
};

std::optional<FruitEstimate> select_fruit(FruitRegistry& registry, const std::vector<FruitEstimate>& observed,
                                          std::int64_t frame, const std::set<int>& excluded = {});

/// Immutable perception output handed to the controller.
struct PerceptionSnapshot {
  std::int64_t frame = -1;
  std::vector<FruitEstimate> fruits;
  std::optional<TreeEstimate> tree;
  bool warm = false;  ///< enough frames processed for tracks to confirm
};

/// Latest-value handoff between a perception producer and the control loop.
class SnapshotBuffer {
 public:
  void publish(std::shared_ptr<const PerceptionSnapshot> s);
  std::shared_ptr<const PerceptionSnapshot> latest() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const PerceptionSnapshot> latest_;
};

struct PerceptionParams {
  TrackerParams tracker;
  RegistryParams registry;
  TreeParams tree;
};

struct PerceptionFrameStats {
  int detections = 0;
  int confirmed = 0;
  int localized = 0;
};

/// Detection boxes + frame -> tracked, localized fruits and the trunk estimate.
class PerceptionPipeline {
 public:
  PerceptionPipeline(CameraIntrinsics k, PerceptionParams params);

  PerceptionSnapshot process(const Frame& frame, const std::vector<BoundingBox>& detections);

  const FruitRegistry& registry() const { return registry_; }
  const IouTracker& tracker() const { return tracker_; }
  const PerceptionFrameStats& last_stats() const { return stats_; }

 private:
  CameraIntrinsics k_;
  PerceptionParams params_;
  IouTracker tracker_;
  FruitRegistry registry_;
  std::int64_t processed_ = 0;
  std::optional<TreeEstimate> last_tree_;
  PerceptionFrameStats stats_;
};

}  // namespace harvest
