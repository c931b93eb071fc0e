#include "harvest/tracker.hpp"

#include <algorithm>
#include <limits>

namespace harvest {

std::vector<int> hungarian(const std::vector<double>& cost, int rows, int cols) {
  std::vector<int> assignment(rows, -1);
  if (rows == 0 || cols == 0) return assignment;
  // Square padding with zero-cost dummies; potentials formulation, 1-based.
  const int n = std::max(rows, cols);
  auto c = [&](int i, int j) { return (i < rows && j < cols) ? cost[static_cast<size_t>(i) * cols + j] : 0.0; };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pu(n + 1, 0.0), pv(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - pu[i0] - pv[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          pu[match[j]] += delta;
          pv[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  for (int j = 1; j <= n; ++j) {
    const int i = match[j] - 1;
    if (i >= 0 && i < rows && j - 1 < cols) assignment[i] = j - 1;
  }
  return assignment;
}

IouTracker::IouTracker(TrackerParams params) : params_(params) {}

std::vector<TrackedBox> IouTracker::update(const std::vector<BoundingBox>& detections) {
  ++frames_;
  const int nt = static_cast<int>(tracks_.size());
  const int nd = static_cast<int>(detections.size());
  // Gated pairs get a cost above any admissible one so they are only chosen when unavoidable.
  constexpr double kGated = 2.0;
  std::vector<double> cost(static_cast<size_t>(nt) * nd, kGated);
  for (int t = 0; t < nt; ++t) {
    for (int d = 0; d < nd; ++d) {
      const double o = iou(tracks_[t].box, detections[d]);
      if (o >= params_.min_iou) cost[static_cast<size_t>(t) * nd + d] = 1.0 - o;
    }
  }
  std::vector<int> assign = hungarian(cost, nt, nd);
  std::vector<char> det_used(nd, 0);
  std::vector<TrackedBox> out;
  std::vector<Track> kept;
  kept.reserve(tracks_.size() + detections.size());
  for (int t = 0; t < nt; ++t) {
    Track tr = tracks_[t];
    const int d = assign[t];
    if (d >= 0 && cost[static_cast<size_t>(t) * nd + d] < kGated) {
      det_used[d] = 1;
      tr.box = detections[d];
      tr.hits += 1;
      tr.time_since_update = 0;
      if (tr.hits >= params_.n_init) tr.confirmed = true;
      if (tr.confirmed) out.push_back({tr.id, tr.box, d});
      kept.push_back(tr);
      continue;
    }
    tr.time_since_update += 1;
    tr.hits = 0;
    if (!tr.confirmed) continue;
    if (tr.time_since_update > params_.max_age) continue;
    kept.push_back(tr);
  }
  for (int d = 0; d < nd; ++d) {
    if (det_used[d]) continue;
    Track tr;
    tr.id = next_id_++;
    tr.box = detections[d];
    tr.hits = 1;
    tr.confirmed = params_.n_init <= 1;
    if (tr.confirmed) out.push_back({tr.id, tr.box, d});
    kept.push_back(tr);
  }
  tracks_ = std::move(kept);
  std::sort(out.begin(), out.end(), [](const TrackedBox& a, const TrackedBox& b) { return a.id < b.id; });
  return out;
}

}  // namespace harvest
