#include "deband/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "deband/error.hpp"
#include "deband/image.hpp"
#include "deband/parallel.hpp"

namespace deband {

namespace fs = std::filesystem;
using nlohmann::json;

const char* split_name(Split s) noexcept {
  switch (s) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  return "?";
}

std::optional<Split> parse_split(const std::string& name) noexcept {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  return std::nullopt;
}

std::vector<Window> select_windows(const GrayImage& mask, const ExtractParams& params) {
  if (params.patch < 1 || params.stride < 1) {
    throw Error(ErrorCode::invalid_argument, "patch and stride must be >= 1");
  }
  if (!(params.tau >= 0.0 && params.tau <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "tau must lie in [0, 1]");
  }
  const int w = mask.width;
  const int h = mask.height;
  // Summed-area table of banded pixels.
  std::vector<std::uint32_t> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    std::uint32_t run = 0;
    for (int x = 0; x < w; ++x) {
      run += mask.data[static_cast<std::size_t>(y) * w + x] != 0 ? 1 : 0;
      sat[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
          sat[static_cast<std::size_t>(y) * (w + 1) + x + 1] + run;
    }
  }
  auto at = [&](int x, int y) { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };

  std::vector<Window> out;
  const double area = static_cast<double>(params.patch) * params.patch;
  for (int y0 = 0; y0 + params.patch <= h; y0 += params.stride) {
    for (int x0 = 0; x0 + params.patch <= w; x0 += params.stride) {
      const int x1 = x0 + params.patch;
      const int y1 = y0 + params.patch;
      const auto banded = at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
      const double fraction = banded / area;
      if (fraction >= params.tau) out.push_back({x0, y0, fraction});
    }
  }
  return out;
}

std::vector<PatchPairRecord> extract_banded_pairs(const SourceRecord& src, const fs::path& out_dir,
                                                  const ExtractParams& params) {
  const ImageBuffer banded = read_png(src.banded_image);
  const ImageBuffer pristine = read_png(src.pristine_image);
  const GrayImage mask = read_png_gray(src.band_mask);
  if (banded.width() != pristine.width() || banded.height() != pristine.height() ||
      banded.width() != mask.width || banded.height() != mask.height) {
    throw Error(ErrorCode::invalid_argument,
                "source '" + src.image_id + "': banded, pristine and mask sizes differ");
  }

  const fs::path patch_dir = out_dir / "patches";
  fs::create_directories(patch_dir);
  std::vector<PatchPairRecord> records;
  for (const Window& win : select_windows(mask, params)) {
    PatchPairRecord rec;
    rec.image_id = src.image_id;
    rec.x0 = win.x0;
    rec.y0 = win.y0;
    rec.banded_fraction = win.banded_fraction;
    const std::string stem =
        src.image_id + "_" + std::to_string(win.x0) + "_" + std::to_string(win.y0);
    rec.banded_patch = "patches/" + stem + "_banded.png";
    rec.pristine_patch = "patches/" + stem + "_pristine.png";
    write_png(out_dir / rec.banded_patch,
              extract_window(banded, win.x0, win.y0, params.patch, params.patch));
    write_png(out_dir / rec.pristine_patch,
              extract_window(pristine, win.x0, win.y0, params.patch, params.patch));
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<SourceRecord> discover_sources(const fs::path& banded_dir, const fs::path& pristine_dir,
                                           const fs::path& masks_dir) {
  std::vector<SourceRecord> sources;
  for (const auto& banded : list_png_files(banded_dir)) {
    SourceRecord rec;
    rec.image_id = banded.stem().string();
    rec.banded_image = banded;
    rec.pristine_image = pristine_dir / banded.filename();
    rec.band_mask = masks_dir / banded.filename();
    for (const auto& p : {rec.pristine_image, rec.band_mask}) {
      if (!fs::exists(p)) {
        throw Error(ErrorCode::io, "source '" + rec.image_id + "': missing " + p.string());
      }
    }
    sources.push_back(std::move(rec));
  }
  if (sources.empty()) throw Error(ErrorCode::io, banded_dir.string() + ": no PNG images");
  return sources;
}

DatasetManifest build_dataset(const std::vector<SourceRecord>& sources, const fs::path& out_dir,
                              const ExtractParams& params, unsigned threads) {
  fs::create_directories(out_dir);
  std::vector<std::vector<PatchPairRecord>> per_source(sources.size());
  parallel_for(sources.size(), threads, [&](std::size_t i) {
    per_source[i] = extract_banded_pairs(sources[i], out_dir, params);
  });

  DatasetManifest manifest;
  manifest.patch = params.patch;
  manifest.stride = params.stride;
  manifest.tau = params.tau;
  for (auto& recs : per_source) {
    for (auto& r : recs) manifest.records.push_back(std::move(r));
  }
  write_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

DatasetManifest split_by_content(std::vector<PatchPairRecord> records,
                                 const std::array<double, 3>& ratios, std::uint64_t seed) {
  const double ratio_sum = ratios[0] + ratios[1] + ratios[2];
  if (std::any_of(ratios.begin(), ratios.end(), [](double r) { return !(r > 0.0); }) ||
      std::abs(ratio_sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::invalid_argument, "split ratios must be positive and sum to 1");
  }

  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[r.image_id];
  if (counts.size() < ratios.size()) {
    throw Error(ErrorCode::invalid_argument,
                "need at least 3 distinct images to split, got " + std::to_string(counts.size()));
  }

  std::vector<std::pair<std::string, std::size_t>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const double total = static_cast<double>(records.size());
  std::array<double, 3> current{0.0, 0.0, 0.0};
  DatasetManifest manifest;
  for (const auto& [id, count] : order) {
    std::size_t best = 0;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < 3; ++s) {
      const double target = ratios[s] * total;
      const double deficit = (target - current[s]) / target;
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = s;
      }
    }
    current[best] += static_cast<double>(count);
    manifest.split_of[id] = static_cast<Split>(best);
  }

  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.image_id, a.y0, a.x0) < std::tie(b.image_id, b.y0, b.x0);
  });
  for (auto& r : records) r.split = manifest.split_of.at(r.image_id);
  manifest.records = std::move(records);
  manifest.ratios = ratios;
  manifest.seed = seed;
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write manifest " + path.string());
  json header = {{"type", "header"},       {"version", 1},
                 {"patch", manifest.patch}, {"stride", manifest.stride},
                 {"tau", manifest.tau},     {"seed", manifest.seed}};
  header["ratios"] = manifest.ratios ? json(*manifest.ratios) : json(nullptr);
  out << header.dump() << "\n";
  for (const auto& r : manifest.records) {
    json line = {{"type", "record"},
                 {"image_id", r.image_id},
                 {"x0", r.x0},
                 {"y0", r.y0},
                 {"banded_patch", r.banded_patch},
                 {"pristine_patch", r.pristine_patch},
                 {"banded_fraction", r.banded_fraction}};
    line["split"] = r.split ? json(split_name(*r.split)) : json(nullptr);
    out << line.dump() << "\n";
  }
  if (!out) throw Error(ErrorCode::io, "failed writing manifest " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open manifest " + path.string());
  DatasetManifest manifest;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.value("type", "record");
      if (type == "header") {
        manifest.patch = j.value("patch", 256);
        manifest.stride = j.value("stride", 75);
        manifest.tau = j.value("tau", 0.5);
        manifest.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("ratios") && j["ratios"].is_array()) {
          manifest.ratios = j["ratios"].get<std::array<double, 3>>();
        }
        continue;
      }
      PatchPairRecord r;
      r.image_id = j.at("image_id").get<std::string>();
      r.x0 = j.at("x0").get<int>();
      r.y0 = j.at("y0").get<int>();
      r.banded_patch = j.at("banded_patch").get<std::string>();
      r.pristine_patch = j.at("pristine_patch").get<std::string>();
      r.banded_fraction = j.value("banded_fraction", 0.0);
      if (j.contains("split") && j["split"].is_string()) {
        r.split = parse_split(j["split"].get<std::string>());
        if (!r.split) throw Error(ErrorCode::format, "unknown split name");
        manifest.split_of.try_emplace(r.image_id, *r.split);
      }
      manifest.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::format,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::format,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return manifest;
}

std::vector<Violation> verify_manifest(const DatasetManifest& manifest, const fs::path& base_dir,
                                       const VerifyOptions& options) {
  std::vector<Violation> violations;

  std::map<std::string, std::set<std::string>> splits_of;
  std::set<std::tuple<std::string, int, int>> seen;
  for (const auto& r : manifest.records) {
    splits_of[r.image_id].insert(r.split ? split_name(*r.split) : "unassigned");
    if (!seen.insert({r.image_id, r.x0, r.y0}).second) {
      violations.push_back({"duplicate", r.image_id,
                            "window (" + std::to_string(r.x0) + "," + std::to_string(r.y0) +
                                ") listed twice"});
    }
    if (r.x0 < 0 || r.y0 < 0 || (manifest.stride > 0 && (r.x0 % manifest.stride != 0 ||
                                                         r.y0 % manifest.stride != 0))) {
      violations.push_back({"grid", r.image_id,
                            "window (" + std::to_string(r.x0) + "," + std::to_string(r.y0) +
                                ") is off the stride-" + std::to_string(manifest.stride) +
                                " grid"});
    }
  }
  for (const auto& [id, names] : splits_of) {
    if (names.size() > 1) {
      std::string joined;
      for (const auto& n : names) joined += (joined.empty() ? "" : ", ") + n;
      violations.push_back({"disjointness", id, "image spans splits: " + joined});
    }
  }

  for (const auto& r : manifest.records) {
    ImageBuffer patches[2];
    bool ok = true;
    const std::string* names[2] = {&r.banded_patch, &r.pristine_patch};
    for (int i = 0; i < 2; ++i) {
      const fs::path p = base_dir / *names[i];
      if (!fs::exists(p)) {
        violations.push_back({"missing_file", r.image_id, p.string()});
        ok = false;
        continue;
      }
      try {
        patches[i] = read_png(p);
      } catch (const Error& e) {
        violations.push_back({"unreadable", r.image_id, e.what()});
        ok = false;
        continue;
      }
      if (patches[i].width() != manifest.patch || patches[i].height() != manifest.patch) {
        violations.push_back({"dimension", r.image_id,
                              p.string() + " is " + std::to_string(patches[i].width()) + "x" +
                                  std::to_string(patches[i].height()) + ", expected " +
                                  std::to_string(manifest.patch) + "x" +
                                  std::to_string(manifest.patch)});
        ok = false;
      }
    }
    if (!ok) continue;
    const auto a = patches[0].data();
    const auto b = patches[1].data();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(int(a[i]) - int(b[i]));
    const double mad = sum / static_cast<double>(a.size());
    if (mad > options.max_mean_abs_diff) {
      violations.push_back({"alignment", r.image_id,
                            r.banded_patch + " differs from its pristine patch by " +
                                std::to_string(mad) + " levels on average"});
    }
  }
  return violations;
}

}  // namespace deband
