#include "deband/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deband/error.hpp"
#include "deband/parallel.hpp"

namespace deband {

namespace {

std::string dims(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

int axis_count(int extent, int tile, int stride, GridCoverage coverage, const char* axis) {
  const int span = extent - tile;
  if (coverage == GridCoverage::exact && span % stride != 0) {
    throw Error(ErrorCode::contract,
                std::string("grid does not cover the image along ") + axis + ": (" +
                    std::to_string(extent) + " - " + std::to_string(tile) +
                    ") is not a multiple of stride " + std::to_string(stride) +
                    "; pad the image first");
  }
  return span / stride + 1;
}

// First and last grid index along one axis whose window contains coordinate v.
std::pair<int, int> covering_range(int v, int tile, int stride, int count) {
  const int lo_num = v - tile + 1;
  int lo = lo_num <= 0 ? 0 : (lo_num + stride - 1) / stride;
  int hi = std::min(count - 1, v / stride);
  return {lo, hi};
}

std::uint8_t quantize(double v) {
  const double r = std::round(v);  // half away from zero
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

}  // namespace

TileGrid plan_grid(int image_w, int image_h, int tile, int stride, GridCoverage coverage) {
  if (tile < 1) throw Error(ErrorCode::invalid_argument, "tile size must be >= 1");
  if (stride < 1 || stride > tile) {
    throw Error(ErrorCode::invalid_argument,
                "stride must be in [1, tile], got " + std::to_string(stride));
  }
  if (image_w < tile || image_h < tile) {
    throw Error(ErrorCode::contract, "image " + dims(image_w, image_h) +
                                         " is smaller than the tile size " +
                                         std::to_string(tile));
  }

  TileGrid grid;
  grid.image_w = image_w;
  grid.image_h = image_h;
  grid.tile = tile;
  grid.stride = stride;
  grid.cols = axis_count(image_w, tile, stride, coverage, "x");
  grid.rows = axis_count(image_h, tile, stride, coverage, "y");
  grid.tiles.reserve(static_cast<std::size_t>(grid.cols) * grid.rows);
  const double half = (tile - 1) / 2.0;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      TileRef t;
      t.x0 = c * stride;
      t.y0 = r * stride;
      t.center_x = t.x0 + half;
      t.center_y = t.y0 + half;
      grid.tiles.push_back(t);
    }
  }
  return grid;
}

int coverage_count(const TileGrid& grid, int x, int y) {
  if (x < 0 || y < 0 || x >= grid.image_w || y >= grid.image_h) {
    throw Error(ErrorCode::invalid_argument, "pixel (" + std::to_string(x) + "," +
                                                 std::to_string(y) + ") is outside the " +
                                                 dims(grid.image_w, grid.image_h) + " grid");
  }
  const auto [cx0, cx1] = covering_range(x, grid.tile, grid.stride, grid.cols);
  const auto [ry0, ry1] = covering_range(y, grid.tile, grid.stride, grid.rows);
  return std::max(0, cx1 - cx0 + 1) * std::max(0, ry1 - ry0 + 1);
}

double fusion_weight(const TileRef& tile, int x, int y) noexcept {
  const double d = std::hypot(x - tile.center_x, y - tile.center_y);
  return 1.0 / std::max(d, kFusionEpsilon);
}

ImageBuffer fuse_weighted(const TileGrid& grid, std::span<const ImageBuffer> tile_outputs,
                          unsigned threads) {
  if (tile_outputs.size() != grid.size()) {
    throw Error(ErrorCode::invalid_argument,
                "fusion expects " + std::to_string(grid.size()) + " tile outputs, got " +
                    std::to_string(tile_outputs.size()));
  }
  for (std::size_t i = 0; i < tile_outputs.size(); ++i) {
    if (tile_outputs[i].width() != grid.tile || tile_outputs[i].height() != grid.tile) {
      throw Error(ErrorCode::invalid_argument,
                  "tile output " + std::to_string(i) + " is " +
                      dims(tile_outputs[i].width(), tile_outputs[i].height()) + ", expected " +
                      dims(grid.tile, grid.tile));
    }
  }

  ImageBuffer out(grid.image_w, grid.image_h);
  parallel_for(static_cast<std::size_t>(grid.image_h), threads, [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    const auto [ry0, ry1] = covering_range(y, grid.tile, grid.stride, grid.rows);
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < grid.image_w; ++x) {
      const auto [cx0, cx1] = covering_range(x, grid.tile, grid.stride, grid.cols);
      double acc[3] = {0.0, 0.0, 0.0};
      double weight_sum = 0.0;
      for (int r = ry0; r <= ry1; ++r) {
        for (int c = cx0; c <= cx1; ++c) {
          const std::size_t idx = static_cast<std::size_t>(r) * grid.cols + c;
          const TileRef& t = grid.tiles[idx];
          const double w = fusion_weight(t, x, y);
          const std::uint8_t* src = tile_outputs[idx].row(y - t.y0) + (x - t.x0) * 3;
          acc[0] += w * src[0];
          acc[1] += w * src[1];
          acc[2] += w * src[2];
          weight_sum += w;
        }
      }
      for (int ch = 0; ch < 3; ++ch) dst[x * 3 + ch] = quantize(acc[ch] / weight_sum);
    }
  });
  return out;
}

}  // namespace deband
