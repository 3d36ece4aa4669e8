#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace deband {

/// Dense CHW float tensor (single image, no batch axis).
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int c, int h, int w)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * h * w, 0.0f) {}

  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height) * width; }
  float* plane(int c) noexcept { return data.data() + c * plane_size(); }
  const float* plane(int c) const noexcept { return data.data() + c * plane_size(); }
  float& at(int c, int y, int x) noexcept { return plane(c)[static_cast<std::size_t>(y) * width + x]; }
  float at(int c, int y, int x) const noexcept { return plane(c)[static_cast<std::size_t>(y) * width + x]; }
};

}  // namespace deband
