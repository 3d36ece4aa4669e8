#include "deband/png_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <string>

#include <png.h>

#include "deband/error.hpp"

namespace deband {

namespace {

struct DecodedPng {
  int width;
  int height;
  std::vector<std::uint8_t> data;
};

DecodedPng decode(const std::filesystem::path& path, png_uint_32 format, int channels) {
  if (!has_png_extension(path)) {
    throw Error(ErrorCode::format, path.string() + ": only PNG images are supported");
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    const bool missing = !std::filesystem::exists(path);
    throw Error(missing ? ErrorCode::io : ErrorCode::format,
                path.string() + ": " + (missing ? "no such file" : image.message));
  }
  image.format = format;
  DecodedPng out{static_cast<int>(image.width), static_cast<int>(image.height), {}};
  out.data.resize(static_cast<std::size_t>(image.width) * image.height * channels);
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&image, &black, out.data.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::format, path.string() + ": " + msg);
  }
  return out;
}

void encode(const std::filesystem::path& path, int width, int height, png_uint_32 format,
            const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, data, 0, nullptr)) {
    throw Error(ErrorCode::io, path.string() + ": " + image.message);
  }
}

}  // namespace

bool has_png_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png";
}

ImageBuffer read_png(const std::filesystem::path& path) {
  auto png = decode(path, PNG_FORMAT_RGB, 3);
  return ImageBuffer(png.width, png.height, std::move(png.data));
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  encode(path, img.width(), img.height(), PNG_FORMAT_RGB, img.data().data());
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  auto png = decode(path, PNG_FORMAT_GRAY, 1);
  return {png.width, png.height, std::move(png.data)};
}

void write_png_gray(const std::filesystem::path& path, const GrayImage& img) {
  encode(path, img.width, img.height, PNG_FORMAT_GRAY, img.data.data());
}

std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorCode::io, dir.string() + ": not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_png_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace deband
