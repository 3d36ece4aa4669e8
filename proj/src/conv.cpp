#include "deband/conv.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "deband/error.hpp"
#include "deband/parallel.hpp"

namespace deband::nn {

namespace {

// Register block: kRowBlock output channels x kPanel output pixels.
constexpr int kRowBlock = 8;
constexpr int kPanel = 32;
// Output pixels per work item and reduction slice per pass.
constexpr int kChunk = 256;
constexpr int kDepthBlock = 256;

using v16 = float __attribute__((vector_size(64)));

inline v16 load16(const float* p) noexcept {
  v16 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
inline void store16(float* p, v16 v) noexcept { std::memcpy(p, &v, sizeof v); }

// c[r][0..31] += sum_k a[k][r] * b[k][0..31] for r in [0, 8).
void micro_kernel(int depth, const float* a, const float* b, float* c, std::size_t ldc) noexcept {
  v16 acc[kRowBlock][2];
  for (int r = 0; r < kRowBlock; ++r) {
    acc[r][0] = load16(c + r * ldc);
    acc[r][1] = load16(c + r * ldc + 16);
  }
  for (int k = 0; k < depth; ++k) {
    const v16 b0 = load16(b);
    const v16 b1 = load16(b + 16);
    for (int r = 0; r < kRowBlock; ++r) {
      const float s = a[r];
      acc[r][0] += s * b0;
      acc[r][1] += s * b1;
    }
    a += kRowBlock;
    b += kPanel;
  }
  for (int r = 0; r < kRowBlock; ++r) {
    store16(c + r * ldc, acc[r][0]);
    store16(c + r * ldc + 16, acc[r][1]);
  }
}

inline float activate(float v, Activation act) noexcept {
  switch (act) {
    case Activation::leaky_relu:
      return v >= 0.0f ? v : v * kLeakySlope;
    case Activation::relu:
      return v > 0.0f ? v : 0.0f;
    case Activation::none:
      break;
  }
  return v;
}

// Flattened view of channel-concatenated inputs.
struct InputView {
  std::vector<const float*> planes;
  int height = 0;
  int width = 0;

  float sample(int c, int y, int x, Activation act) const noexcept {
    if (y < 0 || x < 0 || y >= height || x >= width) return 0.0f;
    return activate(planes[c][static_cast<std::size_t>(y) * width + x], act);
  }
};

InputView make_view(std::span<const Tensor* const> inputs, int expected_channels) {
  if (inputs.empty()) throw Error(ErrorCode::invalid_argument, "convolution needs an input");
  InputView view;
  view.height = inputs.front()->height;
  view.width = inputs.front()->width;
  for (const Tensor* t : inputs) {
    if (t->height != view.height || t->width != view.width) {
      throw Error(ErrorCode::contract, "concatenated inputs disagree on spatial size");
    }
    for (int c = 0; c < t->channels; ++c) view.planes.push_back(t->plane(c));
  }
  if (static_cast<int>(view.planes.size()) != expected_channels) {
    throw Error(ErrorCode::contract, "layer expects " + std::to_string(expected_channels) +
                                         " input channels, got " +
                                         std::to_string(view.planes.size()));
  }
  return view;
}

// Per-thread scratch; reused across work items.
struct Scratch {
  std::vector<float> col;
  std::vector<float> acc;
};
thread_local Scratch t_scratch;

// Shared GEMM driver. `pack` fills col as [panel][depth][kPanel] for the
// chunk's pixels; `store` receives acc rows (padded_out x kChunk).
template <typename Pack, typename Store>
void run_chunk(int depth, int padded_out, int pixels, const std::vector<float>& packed_w,
               const std::vector<float>& bias, Pack&& pack, Store&& store) {
  const int panels = (pixels + kPanel - 1) / kPanel;
  const int width = panels * kPanel;
  Scratch& s = t_scratch;
  s.col.resize(static_cast<std::size_t>(panels) * depth * kPanel);
  s.acc.resize(static_cast<std::size_t>(padded_out) * width);
  pack(s.col.data());

  for (int co = 0; co < padded_out; ++co) {
    const float b = co < static_cast<int>(bias.size()) ? bias[co] : 0.0f;
    std::fill_n(s.acc.data() + static_cast<std::size_t>(co) * width, width, b);
  }
  for (int k0 = 0; k0 < depth; k0 += kDepthBlock) {
    const int kc = std::min(kDepthBlock, depth - k0);
    for (int cb = 0; cb < padded_out; cb += kRowBlock) {
      const float* a = packed_w.data() + static_cast<std::size_t>(cb) * depth + k0 * kRowBlock;
      for (int j = 0; j < panels; ++j) {
        const float* b = s.col.data() + (static_cast<std::size_t>(j) * depth + k0) * kPanel;
        micro_kernel(kc, a, b, s.acc.data() + static_cast<std::size_t>(cb) * width + j * kPanel,
                     static_cast<std::size_t>(width));
      }
    }
  }
  store(s.acc.data(), static_cast<std::size_t>(width));
}

// Weight matrix (rows x depth, row-major) -> [row block][depth][kRowBlock].
std::vector<float> pack_rows(const std::vector<float>& m, int rows, int padded_rows, int depth) {
  std::vector<float> out(static_cast<std::size_t>(padded_rows) * depth, 0.0f);
  for (int r = 0; r < rows; ++r) {
    const int block = r / kRowBlock;
    const int lane = r % kRowBlock;
    for (int k = 0; k < depth; ++k) {
      out[(static_cast<std::size_t>(block) * depth + k) * kRowBlock + lane] =
          m[static_cast<std::size_t>(r) * depth + k];
    }
  }
  return out;
}

// Transposed conv, output parity p in {0,1} along one axis: the two input
// offsets and kernel taps that reach it (output = 2*input - 1 + tap).
constexpr int kParityOffset[2][2] = {{0, -1}, {1, 0}};
constexpr int kParityTap[2][2] = {{1, 3}, {0, 2}};

}  // namespace

Conv4x4::Conv4x4(bool transposed, int in_channels, int out_channels,
                 std::span<const float> weight, std::span<const float> bias)
    : transposed_(transposed), in_channels_(in_channels), out_channels_(out_channels) {
  if (in_channels < 1 || out_channels < 1) {
    throw Error(ErrorCode::invalid_argument, "layer channel counts must be positive");
  }
  const std::size_t expected =
      static_cast<std::size_t>(in_channels) * out_channels * kKernel * kKernel;
  if (weight.size() != expected || bias.size() != static_cast<std::size_t>(out_channels)) {
    throw Error(ErrorCode::contract, "layer weight/bias sizes do not match channel counts");
  }
  padded_out_ = (out_channels + kRowBlock - 1) / kRowBlock * kRowBlock;
  bias_.assign(bias.begin(), bias.end());

  if (!transposed) {
    depth_ = in_channels * kKernel * kKernel;
    std::vector<float> m(weight.begin(), weight.end());  // already [out][in*16]
    packed_.push_back(pack_rows(m, out_channels, padded_out_, depth_));
    return;
  }

  depth_ = in_channels * 4;
  for (int py = 0; py < 2; ++py) {
    for (int px = 0; px < 2; ++px) {
      std::vector<float> m(static_cast<std::size_t>(out_channels) * depth_);
      for (int co = 0; co < out_channels; ++co) {
        for (int ci = 0; ci < in_channels; ++ci) {
          for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
              const int ky = kParityTap[py][a];
              const int kx = kParityTap[px][b];
              const std::size_t src =
                  ((static_cast<std::size_t>(ci) * out_channels + co) * kKernel + ky) * kKernel +
                  kx;
              m[static_cast<std::size_t>(co) * depth_ + ci * 4 + a * 2 + b] = weight[src];
            }
          }
        }
      }
      packed_.push_back(pack_rows(m, out_channels, padded_out_, depth_));
    }
  }
}

Tensor Conv4x4::forward(const Tensor& input, Activation act, unsigned threads) const {
  const Tensor* inputs[] = {&input};
  return forward(inputs, act, threads);
}

Tensor Conv4x4::forward(std::span<const Tensor* const> inputs, Activation act,
                        unsigned threads) const {
  const InputView in = make_view(inputs, in_channels_);

  if (!transposed_) {
    if (in.height % 2 != 0 || in.width % 2 != 0) {
      throw Error(ErrorCode::contract, "strided convolution needs even input dimensions, got " +
                                           std::to_string(in.width) + "x" +
                                           std::to_string(in.height));
    }
    Tensor out(out_channels_, in.height / 2, in.width / 2);
    const int total = out.height * out.width;
    const int chunks = (total + kChunk - 1) / kChunk;
    parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t chunk) {
      const int p0 = static_cast<int>(chunk) * kChunk;
      const int pixels = std::min(kChunk, total - p0);
      auto pack = [&](float* col) {
        const int panels = (pixels + kPanel - 1) / kPanel;
        for (int j = 0; j < panels; ++j) {
          float* panel = col + static_cast<std::size_t>(j) * depth_ * kPanel;
          for (int l = 0; l < kPanel; ++l) {
            const int p = j * kPanel + l;
            if (p >= pixels) {
              for (int k = 0; k < depth_; ++k) panel[k * kPanel + l] = 0.0f;
              continue;
            }
            const int oy = (p0 + p) / out.width;
            const int ox = (p0 + p) % out.width;
            const int iy0 = oy * kStride - kPadding;
            const int ix0 = ox * kStride - kPadding;
            int k = 0;
            for (int ci = 0; ci < in_channels_; ++ci) {
              for (int ky = 0; ky < kKernel; ++ky) {
                for (int kx = 0; kx < kKernel; ++kx, ++k) {
                  panel[k * kPanel + l] = in.sample(ci, iy0 + ky, ix0 + kx, act);
                }
              }
            }
          }
        }
      };
      auto store = [&](const float* acc, std::size_t ld) {
        for (int co = 0; co < out_channels_; ++co) {
          std::memcpy(out.plane(co) + p0, acc + co * ld, sizeof(float) * pixels);
        }
      };
      run_chunk(depth_, padded_out_, pixels, packed_[0], bias_, pack, store);
    });
    return out;
  }

  Tensor out(out_channels_, in.height * 2, in.width * 2);
  const int total = in.height * in.width;
  const int chunks_per_parity = (total + kChunk - 1) / kChunk;
  parallel_for(static_cast<std::size_t>(chunks_per_parity) * 4, threads, [&](std::size_t item) {
    const int parity = static_cast<int>(item) / chunks_per_parity;
    const int py = parity / 2;
    const int px = parity % 2;
    const int q0 = static_cast<int>(item % chunks_per_parity) * kChunk;
    const int pixels = std::min(kChunk, total - q0);
    auto pack = [&](float* col) {
      const int panels = (pixels + kPanel - 1) / kPanel;
      for (int j = 0; j < panels; ++j) {
        float* panel = col + static_cast<std::size_t>(j) * depth_ * kPanel;
        for (int l = 0; l < kPanel; ++l) {
          const int q = j * kPanel + l;
          if (q >= pixels) {
            for (int k = 0; k < depth_; ++k) panel[k * kPanel + l] = 0.0f;
            continue;
          }
          const int m = (q0 + q) / in.width;
          const int n = (q0 + q) % in.width;
          int k = 0;
          for (int ci = 0; ci < in_channels_; ++ci) {
            for (int a = 0; a < 2; ++a) {
              for (int b = 0; b < 2; ++b, ++k) {
                panel[k * kPanel + l] =
                    in.sample(ci, m + kParityOffset[py][a], n + kParityOffset[px][b], act);
              }
            }
          }
        }
      }
    };
    auto store = [&](const float* acc, std::size_t ld) {
      for (int co = 0; co < out_channels_; ++co) {
        const float* src = acc + co * ld;
        for (int q = 0; q < pixels; ++q) {
          const int m = (q0 + q) / in.width;
          const int n = (q0 + q) % in.width;
          out.at(co, 2 * m + py, 2 * n + px) = src[q];
        }
      }
    };
    run_chunk(depth_, padded_out_, pixels, packed_[parity], bias_, pack, store);
  });
  return out;
}

void instance_norm(Tensor& t, unsigned threads) {
  const std::size_t n = t.plane_size();
  parallel_for(static_cast<std::size_t>(t.channels), threads, [&](std::size_t c) {
    float* p = t.plane(static_cast<int>(c));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += p[i];
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = p[i] - mean;
      sq += d * d;
    }
    const double inv = 1.0 / std::sqrt(sq / static_cast<double>(n) + kInstanceNormEps);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<float>((p[i] - mean) * inv);
  });
}

}  // namespace deband::nn
