#pragma once

#include <cmath>

#include "harvest/kernels.hpp"

namespace harvest::kernels::detail {

// Shared by every variant for the per-pixel path; vector code must match it bit for bit.
inline void hsv_float(float r, float g, float b, float& h, float& s, float& v) {
  v = std::fmax(r, std::fmax(g, b));
  const float mn = std::fmin(r, std::fmin(g, b));
  const float diff = v - mn;
  s = v > 0.0f ? diff * 255.0f / v : 0.0f;
  if (diff == 0.0f) {
    h = 0.0f;
  } else if (v == r) {
    h = 60.0f * (g - b) / diff;
  } else if (v == g) {
    h = 120.0f + 60.0f * (b - r) / diff;
  } else {
    h = 240.0f + 60.0f * (r - g) / diff;
  }
  if (h < 0.0f) h += 360.0f;
  h = std::nearbyint(h * 0.5f);
  s = std::nearbyint(s);
}

inline bool in_tree_mask(const std::uint8_t* px, float depth, const TreeMaskArgs& a) {
  float h, s, v;
  hsv_float(px[0], px[1], px[2], h, s, v);
  const HsvRange& r = a.range;
  return h >= r.h_lo && h <= r.h_hi && s >= r.s_lo && s <= r.s_hi && v >= r.v_lo && v <= r.v_hi && depth > 0.0f &&
         depth <= a.depth_max;
}

inline void accumulate(MaskStats& st, int u, int v, float depth) {
  ++st.count;
  st.sum_u += u;
  st.sum_v += v;
  st.sum_depth += depth;
}

}  // namespace harvest::kernels::detail
