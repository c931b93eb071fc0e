#include <cstdlib>
#include <cstring>

#include "kernels_common.hpp"

namespace harvest {

bool HsvRange::valid() const {
  return 0 <= h_lo && h_lo <= h_hi && h_hi <= 180 && 0 <= s_lo && s_lo <= s_hi && s_hi <= 255 && 0 <= v_lo &&
         v_lo <= v_hi && v_hi <= 255;
}

Hsv rgb_to_hsv(Rgb c) {
  float h, s, v;
  kernels::detail::hsv_float(c.r, c.g, c.b, h, s, v);
  return {static_cast<int>(h), static_cast<int>(s), static_cast<int>(v)};
}

const char* to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

namespace kernels {

MaskStats tree_mask_scalar(const TreeMaskArgs& a) {
  MaskStats st;
  for (int v = 0; v < a.height; ++v) {
    const size_t row = static_cast<size_t>(v) * a.width;
    for (int u = 0; u < a.width; ++u) {
      const size_t i = row + u;
      const bool hit = detail::in_tree_mask(a.rgb + 3 * i, a.depth[i], a);
      if (a.mask) a.mask[i] = hit ? 1 : 0;
      if (hit) detail::accumulate(st, u, v, a.depth[i]);
    }
  }
  return st;
}

#ifndef HARVEST_HAVE_AVX2
bool avx2_compiled() { return false; }
MaskStats tree_mask_avx2(const TreeMaskArgs& a) { return tree_mask_scalar(a); }
#endif

Isa active_isa() {
  static const Isa isa = [] {
    const char* env = std::getenv("HARVEST_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
#if defined(__x86_64__) || defined(__i386__)
    if (avx2_compiled() && __builtin_cpu_supports("avx2")) return Isa::Avx2;
#endif
    return Isa::Scalar;
  }();
  return isa;
}

MaskStats tree_mask(const TreeMaskArgs& a) {
  return active_isa() == Isa::Avx2 ? tree_mask_avx2(a) : tree_mask_scalar(a);
}

}  // namespace kernels
}  // namespace harvest
