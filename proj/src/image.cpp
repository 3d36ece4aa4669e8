#include "deband/image.hpp"

#include <cstring>
#include <string>

#include "deband/error.hpp"

namespace deband {

namespace {

std::size_t checked_sample_count(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::invalid_argument,
                "image dimensions must be positive, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
         ImageBuffer::kChannels;
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height)
    : width_(width), height_(height), data_(checked_sample_count(width, height), 0) {}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  const std::size_t expected = checked_sample_count(width, height);
  if (data_.size() != expected) {
    throw Error(ErrorCode::invalid_argument,
                "image data holds " + std::to_string(data_.size()) + " samples, expected " +
                    std::to_string(expected));
  }
}

int mirror_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

int aligned_extent(int extent, int multiple) noexcept {
  const int base = extent > multiple ? extent : multiple;
  return (base + multiple - 1) / multiple * multiple;
}

PaddedImage pad_to_multiple(const ImageBuffer& img, int multiple) {
  if (multiple < 1) {
    throw Error(ErrorCode::invalid_argument,
                "pad multiple must be >= 1, got " + std::to_string(multiple));
  }
  if (img.empty()) throw Error(ErrorCode::invalid_argument, "cannot pad an empty image");

  const int out_w = aligned_extent(img.width(), multiple);
  const int out_h = aligned_extent(img.height(), multiple);
  PadSpec spec;
  spec.left = (out_w - img.width()) / 2;
  spec.right = out_w - img.width() - spec.left;
  spec.top = (out_h - img.height()) / 2;
  spec.bottom = out_h - img.height() - spec.top;

  ImageBuffer out(out_w, out_h);
  std::vector<int> src_x(static_cast<std::size_t>(out_w));
  for (int x = 0; x < out_w; ++x) src_x[x] = mirror_index(x - spec.left, img.width());

  for (int y = 0; y < out_h; ++y) {
    const std::uint8_t* src = img.row(mirror_index(y - spec.top, img.height()));
    std::uint8_t* dst = out.row(y);
    // Interior run is a straight copy; only the flanks need the index table.
    for (int x = 0; x < spec.left; ++x) {
      std::memcpy(dst + x * 3, src + src_x[x] * 3, 3);
    }
    std::memcpy(dst + spec.left * 3, src, static_cast<std::size_t>(img.width()) * 3);
    for (int x = spec.left + img.width(); x < out_w; ++x) {
      std::memcpy(dst + x * 3, src + src_x[x] * 3, 3);
    }
  }
  return {std::move(out), spec};
}

ImageBuffer crop(const ImageBuffer& img, const PadSpec& spec) {
  if (spec.left < 0 || spec.right < 0 || spec.top < 0 || spec.bottom < 0) {
    throw Error(ErrorCode::contract, "pad spec has negative entries");
  }
  const int w = img.width() - spec.left - spec.right;
  const int h = img.height() - spec.top - spec.bottom;
  if (w < 1 || h < 1) {
    throw Error(ErrorCode::contract,
                "pad spec (" + std::to_string(spec.left) + "," + std::to_string(spec.right) +
                    "," + std::to_string(spec.top) + "," + std::to_string(spec.bottom) +
                    ") leaves no interior in a " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + " image");
  }
  return extract_window(img, spec.left, spec.top, w, h);
}

ImageBuffer extract_window(const ImageBuffer& img, int x0, int y0, int w, int h) {
  if (w < 1 || h < 1 || x0 < 0 || y0 < 0 || x0 + w > img.width() || y0 + h > img.height()) {
    throw Error(ErrorCode::invalid_argument,
                "window " + std::to_string(w) + "x" + std::to_string(h) + " at (" +
                    std::to_string(x0) + "," + std::to_string(y0) + ") is outside the " +
                    std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " image");
  }
  ImageBuffer out(w, h);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * ImageBuffer::kChannels;
  for (int y = 0; y < h; ++y) {
    std::memcpy(out.row(y), img.row(y0 + y) + static_cast<std::size_t>(x0) * 3, row_bytes);
  }
  return out;
}

ImageBuffer gray_to_rgb(int width, int height, std::span<const std::uint8_t> gray) {
  ImageBuffer out(width, height);
  if (gray.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::invalid_argument, "gray raster size does not match dimensions");
  }
  auto dst = out.data();
  for (std::size_t i = 0; i < gray.size(); ++i) {
    dst[i * 3] = dst[i * 3 + 1] = dst[i * 3 + 2] = gray[i];
  }
  return out;
}

}  // namespace deband
