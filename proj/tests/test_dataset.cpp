#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "deband/dataset.hpp"
#include "deband/error.hpp"
#include "deband/png_io.hpp"
#include "test_util.hpp"

using namespace deband;
namespace fs = std::filesystem;

namespace {

GrayImage filled_mask(int w, int h, std::uint8_t v) {
  return {w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, v)};
}

std::vector<PatchPairRecord> fake_records(const std::vector<int>& counts) {
  std::vector<PatchPairRecord> recs;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (int k = 0; k < counts[i]; ++k) {
      PatchPairRecord r;
      r.image_id = "img" + std::to_string(i);
      r.x0 = 75 * (k % 23);
      r.y0 = 75 * (k / 23);
      recs.push_back(r);
    }
  }
  return recs;
}

std::array<double, 3> shares(const DatasetManifest& m) {
  std::array<double, 3> n{0, 0, 0};
  for (const auto& r : m.records) n[static_cast<int>(*r.split)] += 1;
  for (auto& v : n) v /= static_cast<double>(m.records.size());
  return n;
}

// Writes one banded/pristine/mask triple. The banded image is the pristine
// one quantized to multiples of 8; the mask marks the left `banded_cols`.
void write_source(const fs::path& root, const std::string& id, int w, int h, int banded_cols,
                  std::uint64_t seed) {
  fs::create_directories(root / "banded");
  fs::create_directories(root / "pristine");
  fs::create_directories(root / "masks");
  ImageBuffer pristine(w, h);
  std::mt19937 rng(static_cast<unsigned>(seed));
  const int base = static_cast<int>(rng() % 100);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        pristine.at(x, y, c) = static_cast<std::uint8_t>(base + (x + 2 * y) * 100 / (w + 2 * h) + c);
  ImageBuffer banded = pristine;
  for (auto& v : banded.data()) v = static_cast<std::uint8_t>(v & ~7);
  GrayImage mask = filled_mask(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < banded_cols; ++x) mask.data[static_cast<std::size_t>(y) * w + x] = 255;
  write_png(root / "banded" / (id + ".png"), banded);
  write_png(root / "pristine" / (id + ".png"), pristine);
  write_png_gray(root / "masks" / (id + ".png"), mask);
}

}  // namespace

TEST_CASE("split names") {
  CHECK(std::string(split_name(Split::val)) == "val");
  CHECK(parse_split("test") == Split::test);
  CHECK_FALSE(parse_split("validation").has_value());
}

TEST_CASE("window selection on an FHD mask") {
  ExtractParams p;
  SUBCASE("all banded") {
    p.tau = 1.0;
    const auto w = select_windows(filled_mask(1920, 1080, 255), p);
    CHECK(w.size() == 253);
    for (const auto& win : w) CHECK(win.banded_fraction == 1.0);
    CHECK(w.back().x0 == 22 * 75);
    CHECK(w.back().y0 == 10 * 75);
  }
  SUBCASE("nothing banded") {
    p.tau = 0.0001;
    CHECK(select_windows(filled_mask(1920, 1080, 0), p).empty());
  }
  SUBCASE("tau zero keeps every candidate") {
    p.tau = 0.0;
    CHECK(select_windows(filled_mask(1920, 1080, 0), p).size() == 253);
  }
}

TEST_CASE("banded fraction matches a direct count") {
  std::mt19937 rng(3);
  GrayImage mask = filled_mask(700, 500, 0);
  for (auto& v : mask.data) v = rng() % 3 == 0 ? 1 : 0;
  ExtractParams p;
  p.tau = 0.0;
  const auto wins = select_windows(mask, p);
  CHECK(wins.size() == std::size_t((700 - 256) / 75 + 1) * ((500 - 256) / 75 + 1));
  for (const auto& win : wins) {
    CHECK(win.x0 + 256 <= 700);
    CHECK(win.y0 + 256 <= 500);
    long n = 0;
    for (int y = win.y0; y < win.y0 + 256; ++y)
      for (int x = win.x0; x < win.x0 + 256; ++x) n += mask.data[y * 700 + x] != 0;
    CHECK(win.banded_fraction == doctest::Approx(n / 65536.0));
  }
}

TEST_CASE("window count matches the closed form") {
  std::mt19937 rng(8);
  for (int i = 0; i < 25; ++i) {
    const int w = 30 + static_cast<int>(rng() % 400), h = 30 + static_cast<int>(rng() % 400);
    ExtractParams p{32, 1 + static_cast<int>(rng() % 40), 0.0};
    const auto wins = select_windows(filled_mask(w, h, 1), p);
    const std::size_t cols = w >= 32 ? (w - 32) / p.stride + 1 : 0;
    const std::size_t rows = h >= 32 ? (h - 32) / p.stride + 1 : 0;
    CHECK(wins.size() == cols * rows);
  }
}

TEST_CASE("three equal images go one per split") {
  const auto m = split_by_content(fake_records({100, 100, 100}));
  CHECK(m.split_of.at("img0") == Split::train);
  CHECK(m.split_of.at("img1") == Split::val);
  CHECK(m.split_of.at("img2") == Split::test);
}

TEST_CASE("split shares stay near 60/20/20 on random corpora") {
  std::mt19937 rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int images = 20 + static_cast<int>(rng() % 60);
    std::vector<int> counts;
    for (int i = 0; i < images; ++i) counts.push_back(1 + static_cast<int>(rng() % 500));
    const auto m = split_by_content(fake_records(counts), {0.6, 0.2, 0.2}, trial);
    const auto s = shares(m);
    const double target[3] = {0.6, 0.2, 0.2};
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(s[k] - target[k]));
    // Disjointness holds by construction; check it anyway.
    for (const auto& r : m.records) REQUIRE(r.split == m.split_of.at(r.image_id));
  }
  INFO("worst deviation " << worst);
  CHECK(worst <= 0.10);
}

TEST_CASE("split ignores record order") {
  auto recs = fake_records({5, 80, 80, 13, 200, 7, 1, 44});
  const auto a = split_by_content(recs);
  std::mt19937 rng(1);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(recs.begin(), recs.end(), rng);
    const auto b = split_by_content(recs, {0.6, 0.2, 0.2}, 77);
    CHECK(b.split_of == a.split_of);
    REQUIRE(b.records.size() == a.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      CHECK(b.records[k].image_id == a.records[k].image_id);
      CHECK(b.records[k].x0 == a.records[k].x0);
    }
  }
}

TEST_CASE("split input validation") {
  CHECK_THROWS_AS(split_by_content(fake_records({1, 2})), Error);
  CHECK_THROWS_AS(split_by_content(fake_records({1, 2, 3}), {0.5, 0.5, 0.5}), Error);
  CHECK_THROWS_AS(split_by_content(fake_records({1, 2, 3}), {1.0, 0.0, 0.0}), Error);
}

TEST_CASE("extract, split, verify on a synthetic corpus") {
  testutil::TempDir dir("dataset");
  write_source(dir.path(), "a", 400, 300, 400, 1);   // fully banded
  write_source(dir.path(), "b", 500, 256, 100, 2);   // left 100 columns banded
  write_source(dir.path(), "c", 331, 331, 0, 3);     // clean
  write_source(dir.path(), "d", 256, 256, 256, 4);

  const auto sources = discover_sources(dir / "banded", dir / "pristine", dir / "masks");
  REQUIRE(sources.size() == 4);
  const auto out = dir / "out";
  const auto built = build_dataset(sources, out, {}, 2);
  // a: 2x1 windows; b: best window is 100/256 banded, under tau; d: 1.
  std::map<std::string, int> per;
  for (const auto& r : built.records) ++per[r.image_id];
  CHECK(per["a"] == 2);
  CHECK(per["b"] == 0);
  CHECK(per["c"] == 0);
  CHECK(per["d"] == 1);
  CHECK(fs::exists(out / "patches/a_75_0_banded.png"));
  CHECK(fs::exists(out / "patches/a_75_0_pristine.png"));

  // Patches are exact crops.
  const auto full = read_png(dir / "banded/a.png");
  CHECK(read_png(out / "patches/a_75_0_banded.png") == extract_window(full, 75, 0, 256, 256));

  auto manifest = read_manifest(out / "manifest.jsonl");
  CHECK(manifest.records.size() == 3);
  CHECK(manifest.stride == 75);
  CHECK(verify_manifest(manifest, out).empty());

  // Need three images to split: add one more source then rebuild.
  write_source(dir.path(), "e", 256, 300, 256, 5);
  build_dataset(discover_sources(dir / "banded", dir / "pristine", dir / "masks"), out);
  manifest = read_manifest(out / "manifest.jsonl");
  auto split = split_by_content(manifest.records, {0.6, 0.2, 0.2}, 9);
  write_manifest(out / "split.jsonl", split);
  const auto reread = read_manifest(out / "split.jsonl");
  CHECK(reread.split_of == split.split_of);
  CHECK(reread.seed == 9);
  REQUIRE(reread.ratios.has_value());
  CHECK((*reread.ratios)[0] == 0.6);
  CHECK(verify_manifest(reread, out).empty());

  SUBCASE("one image in two splits") {
    auto bad = reread;
    for (auto& r : bad.records) {
      if (r.image_id == "a" && r.x0 == 75) r.split = *r.split == Split::train ? Split::test : Split::train;
    }
    const auto v = verify_manifest(bad, out);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == "disjointness");
    CHECK(v[0].image_id == "a");
  }
  SUBCASE("255x256 patch") {
    write_png(out / "patches/d_0_0_pristine.png", ImageBuffer(255, 256));
    const auto v = verify_manifest(reread, out);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == "dimension");
    CHECK(v[0].image_id == "d");
  }
  SUBCASE("missing, unreadable, misaligned, off-grid, duplicate") {
    fs::remove(out / "patches/a_0_0_banded.png");
    { std::ofstream(out / "patches/a_75_0_banded.png") << "not a png"; }
    write_png(out / "patches/e_0_0_banded.png", testutil::random_image(256, 256, 1));
    auto bad = reread;
    bad.records.push_back(bad.records.back());
    bad.records.back().x0 = 10;
    bad.records.push_back(bad.records.front());
    std::set<std::string> kinds;
    for (const auto& v : verify_manifest(bad, out)) kinds.insert(v.kind);
    CHECK(kinds == std::set<std::string>{"missing_file", "unreadable", "alignment", "grid", "duplicate"});
  }
}

TEST_CASE("manifest format") {
  testutil::TempDir dir("manifest");
  DatasetManifest m;
  PatchPairRecord r;
  r.image_id = "x";
  r.banded_patch = "patches/x_0_0_banded.png";
  r.pristine_patch = "patches/x_0_0_pristine.png";
  r.banded_fraction = 0.75;
  m.records.push_back(r);
  write_manifest(dir / "m.jsonl", m);
  std::ifstream in(dir / "m.jsonl");
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header.find("\"type\":\"header\"") != std::string::npos);
  CHECK(line.find("\"type\":\"record\"") != std::string::npos);
  CHECK(line.find("\"split\":null") != std::string::npos);
  const auto back = read_manifest(dir / "m.jsonl");
  REQUIRE(back.records.size() == 1);
  CHECK(back.records[0].banded_fraction == 0.75);
  CHECK_FALSE(back.records[0].split.has_value());

  { std::ofstream(dir / "bad.jsonl") << "{\"type\":\"record\"}\n"; }
  CHECK_THROWS_AS(read_manifest(dir / "bad.jsonl"), Error);
}

TEST_CASE("sources need all three files") {
  testutil::TempDir dir("sources");
  write_source(dir.path(), "a", 64, 64, 0, 1);
  fs::remove(dir / "masks/a.png");
  CHECK_THROWS_AS(discover_sources(dir / "banded", dir / "pristine", dir / "masks"), Error);
}
