#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "deband/image.hpp"

namespace deband {

/// Decodes any PNG to 8-bit RGB (gray is replicated, alpha composited on black).
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& img);

/// Single-channel raster, e.g. a banding mask.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
};
GrayImage read_png_gray(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const GrayImage& img);

/// True when the path carries a .png extension (case-insensitive).
bool has_png_extension(const std::filesystem::path& path);

/// Sorted .png files directly inside `dir`.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);

}  // namespace deband
