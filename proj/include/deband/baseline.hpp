#pragma once

#include <cstdint>

#include "deband/image.hpp"

namespace deband {

/// Cross-pattern gated average modelled on the FFmpeg deband filter's
/// defaults (threshold 0.02 of full scale, range 16). A comparison baseline,
/// not a bit-exact clone: the per-pixel radius comes from a counter hash
/// rather than FFmpeg's PRNG.
struct ClassicDebandParams {
  int threshold = 5;  // 8-bit sample units
  int range = 16;     // pixels
  std::uint64_t seed = 0;
};

/// Radius in [1, range] used for pixel (x, y).
int classic_radius(int x, int y, const ClassicDebandParams& params) noexcept;

/// For every pixel and channel: the four samples at distance r along the
/// axes (mirrored at the borders) replace the source by their rounded mean
/// when all four lie strictly within `threshold` of it.
ImageBuffer classic_deband(const ImageBuffer& img, const ClassicDebandParams& params = {},
                           unsigned threads = 1);

}  // namespace deband
