#pragma once

#include <span>
#include <vector>

#include "deband/tensor.hpp"

namespace deband::nn {

/// Elementwise activation applied to a layer's input as it is read.
enum class Activation { none, leaky_relu, relu };

inline constexpr float kLeakySlope = 0.2f;
inline constexpr int kKernel = 4;
inline constexpr int kStride = 2;
inline constexpr int kPadding = 1;

/// 4x4, stride 2, padding 1 convolution or transposed convolution, the only
/// layer shape the generator uses. Weights arrive in the usual framework
/// layouts ([out][in][4][4] for conv, [in][out][4][4] for transposed conv)
/// and are repacked once into GEMM panels.
///
/// Inputs may be given as several tensors that are concatenated along the
/// channel axis (skip connections) without materialising the concatenation.
/// Every output element is reduced in a fixed order, so results are
/// bit-identical for any thread count.
class Conv4x4 {
 public:
  Conv4x4(bool transposed, int in_channels, int out_channels, std::span<const float> weight,
          std::span<const float> bias);

  bool transposed() const noexcept { return transposed_; }
  int in_channels() const noexcept { return in_channels_; }
  int out_channels() const noexcept { return out_channels_; }

  Tensor forward(std::span<const Tensor* const> inputs, Activation act,
                 unsigned threads = 1) const;
  Tensor forward(const Tensor& input, Activation act, unsigned threads = 1) const;

 private:
  bool transposed_;
  int in_channels_;
  int out_channels_;
  int padded_out_;  // out_channels rounded up to the kernel's row block
  int depth_;       // reduction length per packed matrix
  // conv: one matrix; transposed conv: one per output parity (py * 2 + px).
  std::vector<std::vector<float>> packed_;
  std::vector<float> bias_;
};

/// Per-channel normalisation over the spatial axes, biased variance, no affine.
inline constexpr double kInstanceNormEps = 1e-5;
void instance_norm(Tensor& t, unsigned threads = 1);

}  // namespace deband::nn
