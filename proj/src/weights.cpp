#include "deband/weights.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include <json.hpp>

#include "deband/error.hpp"

namespace deband {

namespace {

using nlohmann::json;

constexpr std::size_t kHeaderBytes = sizeof(kWeightMagic) + sizeof(std::uint64_t);

std::uint64_t read_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

float read_f32_le(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<float>(bits);
}

void append_f32_le(std::vector<std::uint8_t>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

Error format_error(const std::string& what) {
  return Error(ErrorCode::format, "weight file: " + what);
}

}  // namespace

const TensorRecord* WeightSet::find(const std::string& layer, const std::string& role) const {
  for (const auto& t : tensors) {
    if (t.layer == layer && t.role == role) return &t;
  }
  return nullptr;
}

WeightSet parse_weight_bytes(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kWeightMagic, 4) != 0) {
    throw format_error("bad magic (expected DBW1)");
  }
  const std::uint64_t manifest_len = read_u64_le(bytes.data() + 4);
  if (manifest_len > bytes.size() - kHeaderBytes) {
    throw format_error("manifest length exceeds file size");
  }
  const auto* manifest_begin = reinterpret_cast<const char*>(bytes.data() + kHeaderBytes);
  json manifest;
  try {
    manifest = json::parse(manifest_begin, manifest_begin + manifest_len);
  } catch (const json::exception& e) {
    throw format_error(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!manifest.is_object() || manifest.value("format", "") != "DBW1" ||
      !manifest.contains("tensors") || !manifest["tensors"].is_array()) {
    throw format_error("manifest lacks format \"DBW1\" or a tensors array");
  }

  const std::uint8_t* blob = bytes.data() + kHeaderBytes + manifest_len;
  const std::uint64_t blob_size = bytes.size() - kHeaderBytes - manifest_len;

  struct Span {
    std::uint64_t offset, length;
    std::string name;
  };
  std::vector<Span> spans;
  WeightSet out;
  for (const auto& entry : manifest["tensors"]) {
    TensorRecord rec;
    std::uint64_t offset = 0, length = 0;
    try {
      rec.layer = entry.at("layer").get<std::string>();
      rec.role = entry.at("role").get<std::string>();
      rec.shape = entry.at("shape").get<std::vector<int>>();
      offset = entry.at("offset").get<std::uint64_t>();
      length = entry.at("length").get<std::uint64_t>();
      if (entry.value("dtype", "float32") != "float32") {
        throw format_error("tensor " + rec.layer + "." + rec.role + " is not float32");
      }
    } catch (const json::exception& e) {
      throw format_error(std::string("malformed tensor entry: ") + e.what());
    }
    const std::string name = rec.layer + "." + rec.role;
    if (std::any_of(rec.shape.begin(), rec.shape.end(), [](int d) { return d < 1; })) {
      throw format_error("tensor " + name + " has a non-positive dimension");
    }
    if (length != element_count(rec.shape) * sizeof(float)) {
      throw format_error("tensor " + name + " length " + std::to_string(length) +
                         " does not match its shape");
    }
    if (offset > blob_size || length > blob_size - offset) {
      throw format_error("tensor " + name + " lies outside the blob region");
    }
    if (out.find(rec.layer, rec.role) != nullptr) {
      throw format_error("tensor " + name + " appears more than once");
    }
    rec.values.resize(element_count(rec.shape));
    for (std::size_t i = 0; i < rec.values.size(); ++i) {
      rec.values[i] = read_f32_le(blob + offset + i * 4);
    }
    spans.push_back({offset, length, name});
    out.tensors.push_back(std::move(rec));
  }

  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.offset < b.offset; });
  std::uint64_t end = 0;
  for (const auto& s : spans) {
    if (s.offset < end) throw format_error("tensor " + s.name + " overlaps its predecessor");
    end = s.offset + s.length;
  }
  if (end != blob_size) {
    throw format_error(std::to_string(blob_size - end) + " trailing bytes after the last tensor");
  }
  return out;
}

WeightSet read_weight_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open weight file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_weight_bytes(bytes);
}

std::vector<std::uint8_t> serialize_weights(const WeightSet& weights) {
  json manifest;
  manifest["format"] = "DBW1";
  manifest["tensors"] = json::array();
  std::uint64_t offset = 0;
  for (const auto& t : weights.tensors) {
    if (t.values.size() != element_count(t.shape)) {
      throw Error(ErrorCode::invalid_argument,
                  "tensor " + t.layer + "." + t.role + " values do not match its shape");
    }
    const std::uint64_t length = t.values.size() * sizeof(float);
    manifest["tensors"].push_back({{"layer", t.layer},
                                   {"role", t.role},
                                   {"shape", t.shape},
                                   {"dtype", "float32"},
                                   {"offset", offset},
                                   {"length", length}});
    offset += length;
  }
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + text.size() + offset);
  out.insert(out.end(), std::begin(kWeightMagic), std::end(kWeightMagic));
  append_u64_le(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& t : weights.tensors) {
    for (float v : t.values) append_f32_le(out, v);
  }
  return out;
}

void write_weight_file(const std::filesystem::path& path, const WeightSet& weights) {
  const auto bytes = serialize_weights(weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot create weight file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "failed writing weight file " + path.string());
}

}  // namespace deband
