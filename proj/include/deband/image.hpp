#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace deband {

/// Interleaved 8-bit RGB raster, row-major, no row padding.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;
  /// Zero-filled raster. Throws on non-positive dimensions.
  ImageBuffer(int width, int height);
  /// Takes ownership of `data`, which must hold exactly width*height*3 samples.
  ImageBuffer(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t sample_count() const noexcept { return data_.size(); }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  const std::uint8_t* row(int y) const noexcept {
    return data_.data() + static_cast<std::size_t>(y) * width_ * kChannels;
  }
  std::uint8_t* row(int y) noexcept {
    return data_.data() + static_cast<std::size_t>(y) * width_ * kChannels;
  }

  std::uint8_t at(int x, int y, int c) const noexcept { return row(y)[x * kChannels + c]; }
  std::uint8_t& at(int x, int y, int c) noexcept { return row(y)[x * kChannels + c]; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

enum class PadMode { mirror };

/// Border added by pad_to_multiple; crop() with the same spec undoes it.
struct PadSpec {
  int left = 0;
  int right = 0;
  int top = 0;
  int bottom = 0;
  PadMode mode = PadMode::mirror;

  friend bool operator==(const PadSpec&, const PadSpec&) = default;
};

struct PaddedImage {
  ImageBuffer image;
  PadSpec pad;
};

/// Symmetric (edge-repeating) reflection of an arbitrary index into [0, n).
/// Indices further than n outside the range keep reflecting.
int mirror_index(int i, int n) noexcept;

/// Smallest multiple of `multiple` that is >= max(extent, multiple).
int aligned_extent(int extent, int multiple) noexcept;

/// Mirror-pads to the next multiple of `multiple` on each axis, split
/// floor(pad/2) left/top and ceil(pad/2) right/bottom.
PaddedImage pad_to_multiple(const ImageBuffer& img, int multiple);

/// Interior region of a padded image. Throws ErrorCode::contract when the
/// pads do not leave at least one pixel.
ImageBuffer crop(const ImageBuffer& img, const PadSpec& spec);

/// Exact copy of the w x h region at (x0, y0). Throws when it leaves the image.
ImageBuffer extract_window(const ImageBuffer& img, int x0, int y0, int w, int h);

/// Replicates a single-channel raster into RGB (grayscale inputs at load time).
ImageBuffer gray_to_rgb(int width, int height, std::span<const std::uint8_t> gray);

}  // namespace deband
