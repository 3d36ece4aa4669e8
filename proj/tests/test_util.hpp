#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "deband/image.hpp"

namespace testutil {

inline deband::ImageBuffer random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  deband::ImageBuffer img(w, h);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng() >> 56);
  return img;
}

inline deband::ImageBuffer constant_image(int w, int h, std::uint8_t r, std::uint8_t g,
                                          std::uint8_t b) {
  deband::ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
  return img;
}

// Horizontal gray ramp quantized into plateaus `plateau` pixels wide, `step`
// levels apart.
inline deband::ImageBuffer plateau_ramp(int w, int h, int plateau, int base = 64, int step = 1) {
  deband::ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto v = static_cast<std::uint8_t>(base + step * (x / plateau));
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
    }
  }
  return img;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("deband_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
