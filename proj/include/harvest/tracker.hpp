#pragma once

#include <cstdint>
#include <vector>

#include "harvest/camera.hpp"

namespace harvest {

struct TrackerParams {
  double min_iou = 0.5;
  int n_init = 10;
  int max_age = 300;

  bool valid() const { return min_iou > 0.0 && min_iou <= 1.0 && n_init >= 1 && max_age >= 1; }
};

struct Track {
  int id = 0;
  BoundingBox box;
  int hits = 0;  ///< consecutive matched frames
  int time_since_update = 0;
  bool confirmed = false;
};

struct TrackedBox {
  int id = 0;
  BoundingBox box;
  int detection = -1;  ///< index into the detection list of this frame
};

/// Minimum-cost assignment of rows to columns (Hungarian method). cost is
/// rows x cols, row-major. Returns, per row, the assigned column or -1.
std::vector<int> hungarian(const std::vector<double>& cost, int rows, int cols);

/// IoU tracker with SORT-style lifecycle: tentative tracks need n_init
/// consecutive matches and die on their first miss; confirmed tracks survive
/// up to max_age missed frames. IDs are never reused.
class IouTracker {
 public:
  explicit IouTracker(TrackerParams params = {});

  /// Confirmed tracks matched in this frame.
  std::vector<TrackedBox> update(const std::vector<BoundingBox>& detections);

  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerParams& params() const { return params_; }
  std::int64_t frames() const { return frames_; }

 private:
  TrackerParams params_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
  std::int64_t frames_ = 0;
};

}  // namespace harvest
