#include <immintrin.h>

#include "kernels_common.hpp"

namespace harvest::kernels {

bool avx2_compiled() { return true; }

namespace {

__attribute__((target("avx2"))) inline __m256 within(__m256 x, int lo_bound, int hi_bound) {
  return _mm256_and_ps(_mm256_cmp_ps(x, _mm256_set1_ps(static_cast<float>(lo_bound)), _CMP_GE_OQ),
                       _mm256_cmp_ps(x, _mm256_set1_ps(static_cast<float>(hi_bound)), _CMP_LE_OQ));
}

// Returns a bitmask of the 8 pixels starting at px that pass the HSV and depth tests.
__attribute__((target("avx2"))) unsigned classify8(const std::uint8_t* px, const float* depth,
                                                     const TreeMaskArgs& a) {
  const __m128i lo = _mm_loadu_si128(reinterpret_cast<const __m128i*>(px));
  const __m128i hi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(px + 8));
  const __m128i shuf_lo = _mm_setr_epi8(0, 3, 6, 9, 1, 4, 7, 10, 2, 5, 8, 11, -1, -1, -1, -1);
  const __m128i shuf_hi = _mm_setr_epi8(4, 7, 10, 13, 5, 8, 11, 14, 6, 9, 12, 15, -1, -1, -1, -1);
  const __m128i p0 = _mm_shuffle_epi8(lo, shuf_lo);
  const __m128i p1 = _mm_shuffle_epi8(hi, shuf_hi);
  const __m128i rg = _mm_unpacklo_epi32(p0, p1);
  const __m128i bx = _mm_unpackhi_epi32(p0, p1);
  const __m256 r = _mm256_cvtepi32_ps(_mm256_cvtepu8_epi32(rg));
  const __m256 g = _mm256_cvtepi32_ps(_mm256_cvtepu8_epi32(_mm_srli_si128(rg, 8)));
  const __m256 b = _mm256_cvtepi32_ps(_mm256_cvtepu8_epi32(bx));

  const __m256 zero = _mm256_setzero_ps();
  const __m256 v = _mm256_max_ps(r, _mm256_max_ps(g, b));
  const __m256 mn = _mm256_min_ps(r, _mm256_min_ps(g, b));
  const __m256 diff = _mm256_sub_ps(v, mn);
  const __m256 flat = _mm256_cmp_ps(diff, zero, _CMP_EQ_OQ);
  const __m256 safe_diff = _mm256_blendv_ps(diff, _mm256_set1_ps(1.0f), flat);
  const __m256 safe_v = _mm256_blendv_ps(v, _mm256_set1_ps(1.0f), _mm256_cmp_ps(v, zero, _CMP_EQ_OQ));

  __m256 s = _mm256_div_ps(_mm256_mul_ps(diff, _mm256_set1_ps(255.0f)), safe_v);
  s = _mm256_and_ps(s, _mm256_cmp_ps(v, zero, _CMP_GT_OQ));

  const __m256 k60 = _mm256_set1_ps(60.0f);
  const __m256 hr = _mm256_div_ps(_mm256_mul_ps(k60, _mm256_sub_ps(g, b)), safe_diff);
  const __m256 hg =
      _mm256_add_ps(_mm256_set1_ps(120.0f), _mm256_div_ps(_mm256_mul_ps(k60, _mm256_sub_ps(b, r)), safe_diff));
  const __m256 hb =
      _mm256_add_ps(_mm256_set1_ps(240.0f), _mm256_div_ps(_mm256_mul_ps(k60, _mm256_sub_ps(r, g)), safe_diff));
  __m256 h = _mm256_blendv_ps(hb, hg, _mm256_cmp_ps(v, g, _CMP_EQ_OQ));
  h = _mm256_blendv_ps(h, hr, _mm256_cmp_ps(v, r, _CMP_EQ_OQ));
  h = _mm256_andnot_ps(flat, h);
  h = _mm256_add_ps(h, _mm256_and_ps(_mm256_set1_ps(360.0f), _mm256_cmp_ps(h, zero, _CMP_LT_OQ)));
  constexpr int kNearest = _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC;
  h = _mm256_round_ps(_mm256_mul_ps(h, _mm256_set1_ps(0.5f)), kNearest);
  s = _mm256_round_ps(s, kNearest);

  const __m256 d = _mm256_loadu_ps(depth);
  __m256 keep = within(h, a.range.h_lo, a.range.h_hi);
  keep = _mm256_and_ps(keep, within(s, a.range.s_lo, a.range.s_hi));
  keep = _mm256_and_ps(keep, within(v, a.range.v_lo, a.range.v_hi));
  keep = _mm256_and_ps(keep, _mm256_cmp_ps(d, zero, _CMP_GT_OQ));
  keep = _mm256_and_ps(keep, _mm256_cmp_ps(d, _mm256_set1_ps(a.depth_max), _CMP_LE_OQ));
  return static_cast<unsigned>(_mm256_movemask_ps(keep));
}

}  // namespace

__attribute__((target("avx2"))) MaskStats tree_mask_avx2(const TreeMaskArgs& a) {
  MaskStats st;
  for (int v = 0; v < a.height; ++v) {
    const size_t row = static_cast<size_t>(v) * a.width;
    int u = 0;
    for (; u + 8 <= a.width; u += 8) {
      const size_t i = row + u;
      const unsigned bits = classify8(a.rgb + 3 * i, a.depth + i, a);
      if (a.mask) {
        for (int j = 0; j < 8; ++j) a.mask[i + j] = (bits >> j) & 1u;
      }
      for (int j = 0; j < 8; ++j) {
        if (bits & (1u << j)) detail::accumulate(st, u + j, v, a.depth[i + j]);
      }
    }
    for (; u < a.width; ++u) {
      const size_t i = row + u;
      const bool hit = detail::in_tree_mask(a.rgb + 3 * i, a.depth[i], a);
      if (a.mask) a.mask[i] = hit ? 1 : 0;
      if (hit) detail::accumulate(st, u, v, a.depth[i]);
    }
  }
  return st;
}

}  // namespace harvest::kernels
