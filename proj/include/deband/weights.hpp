#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace deband {

/// One named parameter tensor of a weight file.
struct TensorRecord {
  std::string layer;
  std::string role;  // "weight" or "bias"
  std::vector<int> shape;
  std::vector<float> values;
};

/// Weight file layout (all integers little-endian):
///
///   offset 0   4 bytes   magic "DBW1"
///   offset 4   8 bytes   u64 manifest length M
///   offset 12  M bytes   UTF-8 JSON manifest
///   offset 12+M          blob region, float32 LE tensors
///
/// The manifest is {"format": "DBW1", "tensors": [{"layer", "role", "shape",
/// "dtype": "float32", "offset", "length"}, ...]} where offset/length are
/// byte positions inside the blob region. Tensors must not overlap and the
/// blob region must end exactly at the last tensor byte.
inline constexpr char kWeightMagic[4] = {'D', 'B', 'W', '1'};

struct WeightSet {
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(const std::string& layer, const std::string& role) const;
};

/// Parses and structurally validates a weight file. Architecture checks are
/// left to the model. Throws ErrorCode::io or ErrorCode::format.
WeightSet read_weight_file(const std::filesystem::path& path);
WeightSet parse_weight_bytes(const std::vector<std::uint8_t>& bytes);

/// Writes tensors back to back in the given order.
void write_weight_file(const std::filesystem::path& path, const WeightSet& weights);
std::vector<std::uint8_t> serialize_weights(const WeightSet& weights);

}  // namespace deband
