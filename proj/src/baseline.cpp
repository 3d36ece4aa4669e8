#include "deband/baseline.hpp"

#include <cstdlib>
#include <string>

#include "deband/error.hpp"
#include "deband/parallel.hpp"
#include "deband/rng.hpp"

namespace deband {

int classic_radius(int x, int y, const ClassicDebandParams& params) noexcept {
  const std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(y)) << 32) |
                            static_cast<std::uint32_t>(x);
  const std::uint64_t h = mix64(key ^ mix64(params.seed));
  return 1 + static_cast<int>(h % static_cast<std::uint64_t>(params.range));
}

ImageBuffer classic_deband(const ImageBuffer& img, const ClassicDebandParams& params,
                           unsigned threads) {
  if (params.threshold < 0) {
    throw Error(ErrorCode::invalid_argument, "deband threshold must be >= 0");
  }
  if (params.range < 1) throw Error(ErrorCode::invalid_argument, "deband range must be >= 1");

  ImageBuffer out = img;
  const int w = img.width();
  const int h = img.height();
  parallel_for(static_cast<std::size_t>(h), threads, [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    std::uint8_t* dst = out.row(y);
    const std::uint8_t* src = img.row(y);
    for (int x = 0; x < w; ++x) {
      const int r = classic_radius(x, y, params);
      const std::uint8_t* refs[4] = {
          img.row(mirror_index(y - r, h)) + x * 3,
          img.row(mirror_index(y + r, h)) + x * 3,
          src + mirror_index(x - r, w) * 3,
          src + mirror_index(x + r, w) * 3,
      };
      for (int c = 0; c < 3; ++c) {
        const int s = src[x * 3 + c];
        int sum = 0;
        bool flat = true;
        for (const std::uint8_t* ref : refs) {
          if (std::abs(ref[c] - s) >= params.threshold) {
            flat = false;
            break;
          }
          sum += ref[c];
        }
        if (flat) dst[x * 3 + c] = static_cast<std::uint8_t>((sum + 2) / 4);
      }
    }
  });
  return out;
}

}  // namespace deband
