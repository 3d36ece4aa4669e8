#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deband/png_io.hpp"

namespace deband {

/// A labelled source: banded and pristine versions of one image plus a
/// single-channel mask (nonzero = banded pixel), all the same size.
struct SourceRecord {
  std::string image_id;
  std::filesystem::path banded_image;
  std::filesystem::path pristine_image;
  std::filesystem::path band_mask;
};

enum class Split { train, val, test };
const char* split_name(Split s) noexcept;
std::optional<Split> parse_split(const std::string& name) noexcept;

/// Paths are relative to the directory holding the manifest.
struct PatchPairRecord {
  std::string image_id;
  int x0 = 0;
  int y0 = 0;
  std::string banded_patch;
  std::string pristine_patch;
  double banded_fraction = 0.0;
  std::optional<Split> split;
};

struct ExtractParams {
  int patch = 256;
  int stride = 75;
  double tau = 0.5;  // minimum banded-pixel fraction
};

struct DatasetManifest {
  std::vector<PatchPairRecord> records;
  std::map<std::string, Split> split_of;
  int patch = 256;
  int stride = 75;
  double tau = 0.5;
  std::optional<std::array<double, 3>> ratios;
  std::uint64_t seed = 0;
};

/// A candidate window and its banded-pixel fraction.
struct Window {
  int x0 = 0;
  int y0 = 0;
  double banded_fraction = 0.0;
};

/// Sliding windows at k*stride (no edge-snapped extra window) whose mask
/// fraction is >= tau, row-major.
std::vector<Window> select_windows(const GrayImage& mask, const ExtractParams& params);

/// Cuts the selected windows out of the banded and pristine images into
/// `out_dir`/patches as {image_id}_{x0}_{y0}_{banded|pristine}.png.
std::vector<PatchPairRecord> extract_banded_pairs(const SourceRecord& src,
                                                  const std::filesystem::path& out_dir,
                                                  const ExtractParams& params = {});

/// Pairs files by stem across the three directories. Every banded image
/// needs a pristine image and a mask.
std::vector<SourceRecord> discover_sources(const std::filesystem::path& banded_dir,
                                           const std::filesystem::path& pristine_dir,
                                           const std::filesystem::path& masks_dir);

/// Extracts every source (in parallel) and writes `out_dir`/manifest.jsonl.
DatasetManifest build_dataset(const std::vector<SourceRecord>& sources,
                              const std::filesystem::path& out_dir,
                              const ExtractParams& params = {}, unsigned threads = 1);

/// Content-disjoint split. Images are visited by descending patch count
/// (ties by id) and each goes to the split with the largest relative deficit
/// (target - current) / target, earlier splits winning ties. The rule is
/// deterministic; `seed` is recorded in the manifest only.
DatasetManifest split_by_content(std::vector<PatchPairRecord> records,
                                 const std::array<double, 3>& ratios = {0.6, 0.2, 0.2},
                                 std::uint64_t seed = 0);

/// JSON-lines: a header object then one object per record.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

struct Violation {
  std::string kind;  // disjointness, missing_file, unreadable, dimension, alignment, grid, duplicate
  std::string image_id;
  std::string detail;
};

struct VerifyOptions {
  double max_mean_abs_diff = 16.0;  // banded vs pristine, 8-bit units
};

/// Never throws for content problems; every finding becomes a Violation.
std::vector<Violation> verify_manifest(const DatasetManifest& manifest,
                                       const std::filesystem::path& base_dir,
                                       const VerifyOptions& options = {});

}  // namespace deband
