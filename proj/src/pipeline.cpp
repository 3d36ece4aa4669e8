#include "deband/pipeline.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "deband/error.hpp"
#include "deband/parallel.hpp"
#include "deband/tiling.hpp"

namespace deband {

namespace {

void check_backend_input(const DebandBackend& backend, int w, int h) {
  const int div = backend.divisor();
  if (w % div != 0 || h % div != 0 || w < backend.min_size() || h < backend.min_size()) {
    throw Error(ErrorCode::contract, "backend '" + backend.name() + "' cannot take a " +
                                         std::to_string(w) + "x" + std::to_string(h) +
                                         " input");
  }
}

ImageBuffer run_backend(const DebandBackend& backend, const ImageBuffer& img, unsigned threads,
                        const std::string& where) {
  ImageBuffer out;
  try {
    out = backend.apply(img, threads);
  } catch (const Error& e) {
    throw Error(e.code(), "backend '" + backend.name() + "' failed on " + where + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::processing,
                "backend '" + backend.name() + "' failed on " + where + ": " + e.what());
  }
  if (out.width() != img.width() || out.height() != img.height()) {
    throw Error(ErrorCode::processing,
                "backend '" + backend.name() + "' changed the image size on " + where);
  }
  return out;
}

}  // namespace

const char* mode_name(PipelineMode mode) noexcept {
  return mode == PipelineMode::full ? "full" : "weighted";
}

ImageBuffer deband_full(const DebandBackend& backend, const ImageBuffer& img,
                        const PipelineOptions& opts) {
  auto padded = pad_to_multiple(img, opts.align);
  check_backend_input(backend, padded.image.width(), padded.image.height());
  const ImageBuffer out = run_backend(backend, padded.image, opts.threads, "the full image");
  return crop(out, padded.pad);
}

ImageBuffer deband_weighted(const DebandBackend& backend, const ImageBuffer& img,
                            const PipelineOptions& opts) {
  if (opts.stride * 2 != opts.tile) {
    throw Error(ErrorCode::invalid_argument, "weighted mode requires stride == tile / 2");
  }
  if (opts.align % opts.stride != 0) {
    throw Error(ErrorCode::invalid_argument, "alignment must be a multiple of the stride");
  }
  auto padded = pad_to_multiple(img, std::max(opts.align, opts.tile));
  check_backend_input(backend, opts.tile, opts.tile);
  const TileGrid grid = plan_grid(padded.image.width(), padded.image.height(), opts.tile,
                                  opts.stride, GridCoverage::exact);

  std::vector<ImageBuffer> outputs(grid.size());
  parallel_for(grid.size(), opts.threads, [&](std::size_t i) {
    const TileRef& t = grid.tiles[i];
    const ImageBuffer tile = extract_window(padded.image, t.x0, t.y0, opts.tile, opts.tile);
    outputs[i] = run_backend(backend, tile, 1,
                             "tile at (" + std::to_string(t.x0) + "," + std::to_string(t.y0) + ")");
  });
  const ImageBuffer fused = fuse_weighted(grid, outputs, opts.threads);
  return crop(fused, padded.pad);
}

ImageBuffer deband(const DebandBackend& backend, PipelineMode mode, const ImageBuffer& img,
                   const PipelineOptions& opts) {
  return mode == PipelineMode::full ? deband_full(backend, img, opts)
                                    : deband_weighted(backend, img, opts);
}

}  // namespace deband
