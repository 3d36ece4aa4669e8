#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>

#include "deband/baseline.hpp"
#include "deband/generator.hpp"
#include "deband/image.hpp"

namespace deband {

/// Any single-image transform whose output has the input's dimensions.
/// apply() must be safe to call concurrently.
class DebandBackend {
 public:
  virtual ~DebandBackend() = default;

  virtual std::string name() const = 0;
  /// Input widths and heights must be multiples of this.
  virtual int divisor() const { return 1; }
  virtual int min_size() const { return 1; }
  virtual ImageBuffer apply(const ImageBuffer& img, unsigned threads) const = 0;
};

class IdentityBackend final : public DebandBackend {
 public:
  std::string name() const override { return "identity"; }
  ImageBuffer apply(const ImageBuffer& img, unsigned) const override { return img; }
};

class ClassicBackend final : public DebandBackend {
 public:
  explicit ClassicBackend(ClassicDebandParams params = {}) : params_(params) {}
  std::string name() const override { return "classic"; }
  ImageBuffer apply(const ImageBuffer& img, unsigned threads) const override {
    return classic_deband(img, params_, threads);
  }

 private:
  ClassicDebandParams params_;
};

class UnetBackend final : public DebandBackend {
 public:
  explicit UnetBackend(GeneratorModel model) : model_(std::move(model)) {}
  std::string name() const override { return "unet"; }
  int divisor() const override { return kGeneratorDivisor; }
  int min_size() const override { return kGeneratorDivisor; }
  ImageBuffer apply(const ImageBuffer& img, unsigned threads) const override {
    return model_.forward(img, threads);
  }

 private:
  GeneratorModel model_;
};

/// Wraps a function; handy for tests and ad-hoc transforms.
class FunctionBackend final : public DebandBackend {
 public:
  using Fn = std::function<ImageBuffer(const ImageBuffer&)>;
  FunctionBackend(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  ImageBuffer apply(const ImageBuffer& img, unsigned) const override { return fn_(img); }

 private:
  std::string name_;
  Fn fn_;
};

enum class PipelineMode { full, weighted };

struct PipelineOptions {
  int tile = 256;
  int stride = 128;
  int align = 256;
  unsigned threads = 1;
};

/// Mirror-pad to `align`, run the backend once, crop back.
ImageBuffer deband_full(const DebandBackend& backend, const ImageBuffer& img,
                        const PipelineOptions& opts = {});

/// Mirror-pad to `align`, run the backend on every tile of the tile/stride
/// grid (tiles in parallel, one thread each), merge with reciprocal-distance
/// weights, crop back. Requires stride == tile / 2.
ImageBuffer deband_weighted(const DebandBackend& backend, const ImageBuffer& img,
                            const PipelineOptions& opts = {});

ImageBuffer deband(const DebandBackend& backend, PipelineMode mode, const ImageBuffer& img,
                   const PipelineOptions& opts = {});

const char* mode_name(PipelineMode mode) noexcept;

}  // namespace deband
