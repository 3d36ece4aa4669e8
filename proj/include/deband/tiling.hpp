#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "deband/image.hpp"

namespace deband {

/// One square window of a grid. The centre is the centroid of the window's
/// pixel lattice, i.e. half-integer for even tile sides.
struct TileRef {
  int x0 = 0;
  int y0 = 0;
  double center_x = 0.0;
  double center_y = 0.0;
};

/// How plan_grid treats dimensions the stride does not divide.
enum class GridCoverage {
  exact,    ///< (dim - tile) % stride must be 0; otherwise an alignment error.
  sliding,  ///< windows at k*stride while k*stride + tile <= dim; remainder dropped.
};

struct TileGrid {
  int image_w = 0;
  int image_h = 0;
  int tile = 0;
  int stride = 0;
  int cols = 0;
  int rows = 0;
  std::vector<TileRef> tiles;  // row-major

  std::size_t size() const noexcept { return tiles.size(); }
};

TileGrid plan_grid(int image_w, int image_h, int tile, int stride,
                   GridCoverage coverage = GridCoverage::exact);

/// Number of tiles containing pixel (x, y).
int coverage_count(const TileGrid& grid, int x, int y);

/// Reciprocal-distance weight of a tile for pixel (x, y): 1 / max(d, kFusionEpsilon)
/// with d the Euclidean distance from the pixel to the tile centre.
inline constexpr double kFusionEpsilon = 1e-6;
double fusion_weight(const TileRef& tile, int x, int y) noexcept;

/// Weighted merge of per-tile outputs. Each output pixel is the weighted mean
/// of exactly the tiles that contain it, accumulated in double, rounded half
/// away from zero and clamped to [0, 255]. Rows are gathered independently,
/// so the result does not depend on `threads`.
ImageBuffer fuse_weighted(const TileGrid& grid, std::span<const ImageBuffer> tile_outputs,
                          unsigned threads = 1);

}  // namespace deband
