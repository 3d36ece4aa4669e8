#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "deband/conv.hpp"
#include "deband/image.hpp"
#include "deband/tensor.hpp"
#include "deband/weights.hpp"

namespace deband {

enum class LayerKind { conv_down, conv_up };

/// One row of the fixed U-Net table. Kernel 4, stride 2, padding 1 throughout.
struct LayerSpec {
  const char* name;
  LayerKind kind;
  int in_channels;
  int out_channels;
  nn::Activation input_activation;
  bool instance_norm;
};

/// Encoder enc1..enc8 followed by decoder dec1..dec8. Decoder stage k > 1
/// reads the concatenation [enc(9-k), dec(k-1)] (skip first).
std::span<const LayerSpec> generator_architecture();

/// Total spatial downsampling of the encoder; valid inputs are multiples of it.
inline constexpr int kGeneratorDivisor = 256;

/// Immutable U-Net generator. forward() is safe to call concurrently.
class GeneratorModel {
 public:
  /// Validates every tensor against the architecture table.
  /// Throws ErrorCode::format naming the offending layer.
  static GeneratorModel from_weights(const WeightSet& weights);

  /// Samples mapped to [-1, 1]; returns the tanh output, same size as input.
  Tensor forward_tensor(const Tensor& input, unsigned threads = 1) const;
  /// 8-bit in, 8-bit out. Throws ErrorCode::contract unless both dimensions
  /// are multiples of 256.
  ImageBuffer forward(const ImageBuffer& img, unsigned threads = 1) const;

  const nn::Conv4x4& layer(std::size_t index) const { return layers_->at(index); }

 private:
  explicit GeneratorModel(std::shared_ptr<const std::vector<nn::Conv4x4>> layers)
      : layers_(std::move(layers)) {}

  std::shared_ptr<const std::vector<nn::Conv4x4>> layers_;
};

GeneratorModel load_weights(const std::filesystem::path& path);

Tensor image_to_tensor(const ImageBuffer& img);
ImageBuffer tensor_to_image(const Tensor& t);

/// Deterministic weight sets matching the architecture, used as committed
/// fixtures: all zeros, or uniform in +-1/sqrt(fan_in) from a SplitMix64
/// stream. `with_bias=false` zeroes every bias.
enum class SyntheticWeights { zero, random };
WeightSet synthetic_weights(SyntheticWeights kind, std::uint64_t seed = 0, bool with_bias = true);

/// Cross-implementation fixture: a JSON file listing seeded inputs and the
/// float32 outputs another implementation produced for the same weights.
///
///   {"weights": "gen.dbw", "tolerance": 1e-4,
///    "cases": [{"seed": 1, "width": 256, "height": 256, "expected": "case1.f32"}]}
///
/// Paths are relative to the fixture file. Inputs come from fixture_input();
/// expected files hold the 3xHxW tanh output as raw float32 LE.
ImageBuffer fixture_input(std::uint64_t seed, int width, int height);

struct FixtureCase {
  std::uint64_t seed = 0;
  int width = 0;
  int height = 0;
  double mean_abs_error = 0.0;
  bool passed = false;
};

struct FixtureResult {
  double tolerance = 0.0;
  std::vector<FixtureCase> cases;
  bool passed() const noexcept;
};

FixtureResult check_fixture(const std::filesystem::path& fixture_json, unsigned threads = 1);

/// Writes a fixture whose expectations come from `model` itself.
void write_fixture(const std::filesystem::path& fixture_json,
                   const std::filesystem::path& weights_file, const GeneratorModel& model,
                   std::span<const std::uint64_t> seeds, int width, int height,
                   double tolerance = 1e-4, unsigned threads = 1);

}  // namespace deband
