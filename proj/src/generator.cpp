#include "deband/generator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "deband/error.hpp"
#include "deband/rng.hpp"

namespace deband {

namespace {

using nn::Activation;

constexpr LayerSpec kArchitecture[] = {
    {"enc1", LayerKind::conv_down, 3, 64, Activation::none, false},
    {"enc2", LayerKind::conv_down, 64, 128, Activation::leaky_relu, true},
    {"enc3", LayerKind::conv_down, 128, 256, Activation::leaky_relu, true},
    {"enc4", LayerKind::conv_down, 256, 512, Activation::leaky_relu, true},
    {"enc5", LayerKind::conv_down, 512, 512, Activation::leaky_relu, true},
    {"enc6", LayerKind::conv_down, 512, 512, Activation::leaky_relu, true},
    {"enc7", LayerKind::conv_down, 512, 512, Activation::leaky_relu, true},
    {"enc8", LayerKind::conv_down, 512, 512, Activation::leaky_relu, false},
    {"dec1", LayerKind::conv_up, 512, 512, Activation::relu, true},
    {"dec2", LayerKind::conv_up, 1024, 512, Activation::relu, true},
    {"dec3", LayerKind::conv_up, 1024, 512, Activation::relu, true},
    {"dec4", LayerKind::conv_up, 1024, 512, Activation::relu, true},
    {"dec5", LayerKind::conv_up, 1024, 256, Activation::relu, true},
    {"dec6", LayerKind::conv_up, 512, 128, Activation::relu, true},
    {"dec7", LayerKind::conv_up, 256, 64, Activation::relu, true},
    {"dec8", LayerKind::conv_up, 128, 3, Activation::relu, false},
};
constexpr int kDepth = 8;

std::vector<int> weight_shape(const LayerSpec& spec) {
  // conv: [out, in, k, k]; transposed conv: [in, out, k, k]
  if (spec.kind == LayerKind::conv_down) {
    return {spec.out_channels, spec.in_channels, nn::kKernel, nn::kKernel};
  }
  return {spec.in_channels, spec.out_channels, nn::kKernel, nn::kKernel};
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

const TensorRecord& require(const WeightSet& w, const LayerSpec& spec, const char* role,
                            const std::vector<int>& shape) {
  const TensorRecord* t = w.find(spec.name, role);
  if (t == nullptr) {
    throw Error(ErrorCode::format,
                std::string("layer ") + spec.name + ": missing tensor '" + role + "'");
  }
  if (t->shape != shape) {
    throw Error(ErrorCode::format, std::string("layer ") + spec.name + ": " + role +
                                       " shape " + shape_string(t->shape) + " != expected " +
                                       shape_string(shape));
  }
  for (float v : t->values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::format,
                  std::string("layer ") + spec.name + ": " + role + " has non-finite values");
    }
  }
  return *t;
}

std::uint8_t to_sample(float v) {
  const double scaled = (static_cast<double>(v) + 1.0) * 127.5;
  return static_cast<std::uint8_t>(std::clamp(std::round(scaled), 0.0, 255.0));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::span<const LayerSpec> generator_architecture() { return kArchitecture; }

GeneratorModel GeneratorModel::from_weights(const WeightSet& weights) {
  std::set<std::pair<std::string, std::string>> known;
  auto layers = std::make_shared<std::vector<nn::Conv4x4>>();
  layers->reserve(std::size(kArchitecture));
  for (const LayerSpec& spec : kArchitecture) {
    const auto& w = require(weights, spec, "weight", weight_shape(spec));
    const auto& b = require(weights, spec, "bias", {spec.out_channels});
    known.insert({spec.name, "weight"});
    known.insert({spec.name, "bias"});
    layers->emplace_back(spec.kind == LayerKind::conv_up, spec.in_channels, spec.out_channels,
                         w.values, b.values);
  }
  for (const auto& t : weights.tensors) {
    if (!known.count({t.layer, t.role})) {
      throw Error(ErrorCode::format,
                  "layer " + t.layer + ": unexpected tensor '" + t.role + "'");
    }
  }
  return GeneratorModel(std::move(layers));
}

GeneratorModel load_weights(const std::filesystem::path& path) {
  return GeneratorModel::from_weights(read_weight_file(path));
}

Tensor GeneratorModel::forward_tensor(const Tensor& input, unsigned threads) const {
  if (input.channels != 3) {
    throw Error(ErrorCode::contract, "generator expects 3 input channels");
  }
  if (input.width % kGeneratorDivisor != 0 || input.height % kGeneratorDivisor != 0 ||
      input.width == 0 || input.height == 0) {
    throw Error(ErrorCode::contract,
                "generator input " + std::to_string(input.width) + "x" +
                    std::to_string(input.height) +
                    " is not a multiple of 256 on both axes; mirror-pad it first");
  }

  const auto& layers = *layers_;
  std::vector<Tensor> enc;
  enc.reserve(kDepth);
  for (int i = 0; i < kDepth; ++i) {
    const LayerSpec& spec = kArchitecture[i];
    const Tensor& src = i == 0 ? input : enc.back();
    Tensor t = layers[i].forward(src, spec.input_activation, threads);
    if (spec.instance_norm) nn::instance_norm(t, threads);
    enc.push_back(std::move(t));
  }

  Tensor dec = layers[kDepth].forward(enc.back(), kArchitecture[kDepth].input_activation, threads);
  nn::instance_norm(dec, threads);
  enc.pop_back();  // innermost activation no longer needed
  for (int i = kDepth + 1; i < 2 * kDepth; ++i) {
    const LayerSpec& spec = kArchitecture[i];
    const Tensor* parts[] = {&enc.back(), &dec};
    Tensor next = layers[i].forward(parts, spec.input_activation, threads);
    if (spec.instance_norm) nn::instance_norm(next, threads);
    dec = std::move(next);
    enc.pop_back();
  }
  for (float& v : dec.data) v = std::tanh(v);
  return dec;
}

ImageBuffer GeneratorModel::forward(const ImageBuffer& img, unsigned threads) const {
  if (img.width() % kGeneratorDivisor != 0 || img.height() % kGeneratorDivisor != 0) {
    throw Error(ErrorCode::contract,
                "generator input " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) +
                    " is not a multiple of 256 on both axes; mirror-pad it first");
  }
  return tensor_to_image(forward_tensor(image_to_tensor(img), threads));
}

Tensor image_to_tensor(const ImageBuffer& img) {
  Tensor t(3, img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    const std::uint8_t* row = img.row(y);
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = row[x * 3 + c] / 127.5f - 1.0f;
    }
  }
  return t;
}

ImageBuffer tensor_to_image(const Tensor& t) {
  if (t.channels != 3) throw Error(ErrorCode::contract, "image tensors must have 3 channels");
  ImageBuffer img(t.width, t.height);
  for (int y = 0; y < t.height; ++y) {
    std::uint8_t* row = img.row(y);
    for (int x = 0; x < t.width; ++x) {
      for (int c = 0; c < 3; ++c) row[x * 3 + c] = to_sample(t.at(c, y, x));
    }
  }
  return img;
}

WeightSet synthetic_weights(SyntheticWeights kind, std::uint64_t seed, bool with_bias) {
  WeightSet set;
  std::uint64_t state = seed;
  for (const LayerSpec& spec : kArchitecture) {
    TensorRecord w{spec.name, "weight", weight_shape(spec), {}};
    TensorRecord b{spec.name, "bias", {spec.out_channels}, {}};
    w.values.assign(static_cast<std::size_t>(spec.in_channels) * spec.out_channels * 16, 0.0f);
    b.values.assign(static_cast<std::size_t>(spec.out_channels), 0.0f);
    if (kind == SyntheticWeights::random) {
      const float scale = 1.0f / std::sqrt(static_cast<float>(spec.in_channels * 16));
      for (float& v : w.values) v = uniform_pm1(state) * scale;
      for (float& v : b.values) {
        const float r = uniform_pm1(state) * scale;
        v = with_bias ? r : 0.0f;
      }
    }
    set.tensors.push_back(std::move(w));
    set.tensors.push_back(std::move(b));
  }
  return set;
}

ImageBuffer fixture_input(std::uint64_t seed, int width, int height) {
  ImageBuffer img(width, height);
  std::uint64_t state = seed;
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(splitmix64(state) >> 56);
  return img;
}

bool FixtureResult::passed() const noexcept {
  return !cases.empty() &&
         std::all_of(cases.begin(), cases.end(), [](const FixtureCase& c) { return c.passed; });
}

FixtureResult check_fixture(const std::filesystem::path& fixture_json, unsigned threads) {
  nlohmann::json doc;
  {
    std::ifstream in(fixture_json);
    if (!in) throw Error(ErrorCode::io, "cannot open fixture " + fixture_json.string());
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::format, "fixture " + fixture_json.string() + ": " + e.what());
    }
  }
  const auto base = fixture_json.parent_path();
  FixtureResult result;
  try {
    result.tolerance = doc.value("tolerance", 1e-4);
    const GeneratorModel model = load_weights(base / doc.at("weights").get<std::string>());
    for (const auto& entry : doc.at("cases")) {
      FixtureCase c;
      c.seed = entry.at("seed").get<std::uint64_t>();
      c.width = entry.value("width", 256);
      c.height = entry.value("height", 256);
      const auto bytes = read_file_bytes(base / entry.at("expected").get<std::string>());
      const std::size_t count = static_cast<std::size_t>(3) * c.width * c.height;
      if (bytes.size() != count * 4) {
        throw Error(ErrorCode::format, "fixture case seed " + std::to_string(c.seed) +
                                           ": expected tensor has the wrong size");
      }
      const Tensor out = model.forward_tensor(image_to_tensor(fixture_input(c.seed, c.width, c.height)), threads);
      double sum = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        for (int b = 3; b >= 0; --b) bits = (bits << 8) | bytes[i * 4 + b];
        sum += std::abs(static_cast<double>(out.data[i]) - std::bit_cast<float>(bits));
      }
      c.mean_abs_error = sum / static_cast<double>(count);
      c.passed = c.mean_abs_error <= result.tolerance;
      result.cases.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format, "fixture " + fixture_json.string() + ": " + e.what());
  }
  return result;
}

void write_fixture(const std::filesystem::path& fixture_json,
                   const std::filesystem::path& weights_file, const GeneratorModel& model,
                   std::span<const std::uint64_t> seeds, int width, int height, double tolerance,
                   unsigned threads) {
  const auto base = fixture_json.parent_path();
  nlohmann::json doc;
  doc["weights"] = std::filesystem::relative(weights_file, base.empty() ? "." : base).string();
  doc["tolerance"] = tolerance;
  doc["cases"] = nlohmann::json::array();
  for (std::uint64_t seed : seeds) {
    const Tensor out =
        model.forward_tensor(image_to_tensor(fixture_input(seed, width, height)), threads);
    const std::string name =
        fixture_json.stem().string() + "_seed" + std::to_string(seed) + ".f32";
    std::ofstream f(base / name, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::io, "cannot write " + (base / name).string());
    for (float v : out.data) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      const char b[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8),
                         static_cast<char>(bits >> 16), static_cast<char>(bits >> 24)};
      f.write(b, 4);
    }
    doc["cases"].push_back({{"seed", seed}, {"width", width}, {"height", height}, {"expected", name}});
  }
  std::ofstream out(fixture_json, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + fixture_json.string());
  out << doc.dump(2) << "\n";
}

}  // namespace deband
