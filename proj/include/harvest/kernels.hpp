#pragma once

#include <cstdint>

#include "harvest/image.hpp"

namespace harvest {

/// Inclusive bounds on 8-bit HSV (H in [0, 180)).
struct HsvRange {
  int h_lo = 10;
  int h_hi = 20;
  int s_lo = 70;
  int s_hi = 130;
  int v_lo = 80;
  int v_hi = 140;

  bool valid() const;
};

struct Hsv {
  int h = 0;
  int s = 0;
  int v = 0;
};

/// Float conversion rounded half-to-even onto the 8-bit HSV scale.
Hsv rgb_to_hsv(Rgb c);

struct MaskStats {
  std::int64_t count = 0;
  std::int64_t sum_u = 0;
  std::int64_t sum_v = 0;
  double sum_depth = 0.0;
};

struct TreeMaskArgs {
  const std::uint8_t* rgb = nullptr;  ///< interleaved, width * height * 3
  const float* depth = nullptr;       ///< width * height, meters
  int width = 0;
  int height = 0;
  HsvRange range;
  float depth_max = 2.0f;
  std::uint8_t* mask = nullptr;  ///< optional, width * height, 1 where both masks hold
};

enum class Isa { Scalar, Avx2 };

const char* to_string(Isa isa);

namespace kernels {

/// Pixels inside the HSV range with 0 < depth <= depth_max, summed in row-major order.
MaskStats tree_mask_scalar(const TreeMaskArgs& args);

bool avx2_compiled();
MaskStats tree_mask_avx2(const TreeMaskArgs& args);

/// Best variant the CPU supports; HARVEST_SIMD=scalar forces the reference path.
Isa active_isa();
MaskStats tree_mask(const TreeMaskArgs& args);

}  // namespace kernels
}  // namespace harvest
