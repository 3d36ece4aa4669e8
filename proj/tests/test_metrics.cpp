#include <doctest.h>

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "deband/error.hpp"
#include "deband/metrics.hpp"
#include "deband/png_io.hpp"
#include "test_util.hpp"

using namespace deband;

namespace {

ImageBuffer vertical(const ImageBuffer& img) {
  // Transpose, so horizontal structure becomes vertical.
  ImageBuffer t(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) t.at(y, x, c) = img.at(x, y, c);
  return t;
}

}  // namespace

TEST_CASE("luma weights") {
  ImageBuffer img(3, 1);
  img.at(0, 0, 0) = 255;
  img.at(1, 0, 1) = 255;
  img.at(2, 0, 2) = 255;
  const auto y = luma709(img);
  CHECK(y[0] == (54 * 255 + 128) >> 8);
  CHECK(y[1] == (183 * 255 + 128) >> 8);
  CHECK(y[2] == (19 * 255 + 128) >> 8);
  CHECK(luma709(testutil::constant_image(1, 1, 255, 255, 255))[0] == 255);
  CHECK(luma709(testutil::constant_image(1, 1, 77, 77, 77))[0] == 77);
}

TEST_CASE("constant image has no band edges") {
  CHECK(band_edge_density(testutil::constant_image(64, 48, 10, 99, 200)) == 0.0);
}

TEST_CASE("4-pixel plateaus are too narrow at window 3") {
  const auto img = testutil::plateau_ramp(256, 32, 4, 0, 4);
  CHECK(band_edge_density(img) == 0.0);
}

TEST_CASE("8-pixel plateaus score one column per step") {
  const auto img = testutil::plateau_ramp(256, 32, 8, 20, 4);
  // Steps sit between columns 8k-1 and 8k for k = 1..31; each marks column 8k-1.
  CHECK(band_edge_density(img) == doctest::Approx(31.0 / 256.0));
  // Same along the other axis.
  CHECK(band_edge_density(vertical(img)) == doctest::Approx(31.0 / 256.0));
  // Steps larger than step_max are not bands.
  const auto cliffs = testutil::plateau_ramp(128, 32, 8, 20, 9);
  CHECK(band_edge_density(cliffs) == 0.0);
}

TEST_CASE("hand-counted line") {
  // 10 px of 50, then 10 px of 51: one step, both flanks flat for 4 diffs.
  ImageBuffer img(20, 7);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 20; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = x < 10 ? 50 : 51;
  CHECK(band_edge_density(img) == doctest::Approx(7.0 / 140.0));
  // Shorten the left flank to 3 flat differences: no longer counted.
  for (int y = 0; y < 7; ++y)
    for (int c = 0; c < 3; ++c) img.at(5, y, c) = 49;
  CHECK(band_edge_density(img) == 0.0);
}

TEST_CASE("white noise is almost never flat") {
  const auto img = testutil::random_image(512, 512, 31);
  CHECK(band_edge_density(img) < 0.001);
}

TEST_CASE("global offset does not change the score") {
  auto img = testutil::plateau_ramp(200, 100, 10, 30, 2);
  // Add some texture in one corner.
  const auto noise = testutil::random_image(200, 100, 4);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 30 + noise.at(x, y, c) % 50;
  const double base = band_edge_density(img);
  CHECK(base > 0.0);
  for (int k : {1, 7, 60}) {
    ImageBuffer shifted = img;
    for (auto& v : shifted.data()) v = static_cast<std::uint8_t>(v + k);
    CHECK(band_edge_density(shifted) == base);
  }
}

TEST_CASE("band-edge density validates its input") {
  CHECK_THROWS_AS(band_edge_density(ImageBuffer(6, 100)), Error);
  CHECK_NOTHROW(band_edge_density(ImageBuffer(7, 7)));
  CHECK_THROWS_AS(band_edge_density(ImageBuffer(20, 20), {3, 0}), Error);
}

TEST_CASE("psnr examples") {
  const auto zero = testutil::constant_image(32, 32, 0, 0, 0);
  const auto one = testutil::constant_image(32, 32, 1, 1, 1);
  CHECK(psnr(zero, one) == doctest::Approx(48.1308).epsilon(1e-5));
  CHECK(psnr(zero, one) == doctest::Approx(20 * std::log10(255.0)));

  // Uniform +-5 error: MSE 25.
  const auto mid = testutil::constant_image(32, 32, 100, 100, 100);
  ImageBuffer pm = mid;
  for (std::size_t i = 0; i < pm.sample_count(); ++i) pm.data()[i] = i % 2 ? 105 : 95;
  CHECK(psnr(mid, pm) == doctest::Approx(34.1514).epsilon(1e-5));

  CHECK(is_identical(psnr(mid, mid)));
  CHECK(psnr(mid, mid) == kPsnrIdentical);

  const auto a = testutil::random_image(40, 30, 1), b = testutil::random_image(40, 30, 2);
  CHECK(psnr(a, b) == psnr(b, a));
  CHECK_THROWS_AS(psnr(a, ImageBuffer(30, 40)), Error);
}

TEST_CASE("aggregate uses the population SD") {
  ScoreMap one{{"a", {{"m", 1.0}}}};
  auto r = aggregate(one);
  CHECK(r.aggregate["m"].mean == 1.0);
  CHECK(r.aggregate["m"].sd == 0.0);
  CHECK(r.aggregate["m"].n == 1);

  ScoreMap two{{"a", {{"m", 0.0}}}, {"b", {{"m", 2.0}}}};
  r = aggregate(two);
  CHECK(r.aggregate["m"].mean == 1.0);
  CHECK(r.aggregate["m"].sd == 1.0);
  CHECK(r.aggregate["m"].n == 2);

  CHECK_THROWS_AS(aggregate({}), Error);
}

TEST_CASE("identical PSNR entries stay out of the statistics") {
  ScoreMap s{{"a", {{"psnr", 30.0}}}, {"b", {{"psnr", kPsnrIdentical}}}, {"c", {{"psnr", 40.0}}}};
  auto r = aggregate(s);
  CHECK(r.aggregate["psnr"].mean == 35.0);
  CHECK(r.aggregate["psnr"].n == 2);

  ScoreMap all{{"a", {{"psnr", kPsnrIdentical}}}};
  CHECK(is_identical(aggregate(all).aggregate["psnr"].mean));

  const auto j = nlohmann::json::parse(report_json(r, "x", {}));
  CHECK(j["per_image"]["b"]["psnr"] == "identical");
  CHECK(j["aggregate"]["psnr"]["mean"] == 35.0);
  CHECK(j["sd_kind"] == "population");
}

TEST_CASE("context rows are emitted verbatim") {
  testutil::TempDir dir("metrics");
  {
    std::ofstream f(dir / "ctx.csv");
    f << "method,metric,mean,sd,n\n"
      << "Banded Images,DBI,0.4059,0.3599,310\n"
      << "Banded Images,BBAND,0.3830,0.2214,310\n"
      << "FFmpeg,DBI,0.2240,0.2439,310\n";
  }
  const auto rows = read_context_csv(dir / "ctx.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].method == "Banded Images");
  CHECK(rows[0].context);
  CHECK(rows[0].stats.at("DBI").mean == 0.4059);
  CHECK(rows[0].stats.at("DBI").sd == 0.3599);
  CHECK(rows[0].stats.at("DBI").n == 310);

  const auto table = render_table(rows, {"DBI", "BBAND"});
  CHECK(table.find("0.4059 (+-0.3599)") != std::string::npos);
  CHECK(table.find("0.3830 (+-0.2214)") != std::string::npos);
  CHECK(table.find("Banded Images *") != std::string::npos);
  // FFmpeg has no BBAND entry.
  CHECK(table.find("| -") != std::string::npos);

  DebandReport rep = aggregate({{"img", {{"DBI", 0.1}}}});
  const auto j = nlohmann::json::parse(report_json(rep, "local", rows));
  CHECK(j["context"][0]["stats"]["DBI"]["mean"].dump() == "0.4059");
  CHECK(j["context"][0]["stats"]["DBI"]["sd"].dump() == "0.3599");
}

TEST_CASE("score CSV parsing") {
  testutil::TempDir dir("scores");
  {
    std::ofstream f(dir / "s.csv");
    f << "image_id,metric,score\n a , DBI , 0.5\nb,DBI,0.25\n\n# comment\nb,BBAND,1e-2\n";
  }
  const auto s = read_score_csv(dir / "s.csv");
  CHECK(s.at("a").at("DBI") == 0.5);
  CHECK(s.at("b").at("BBAND") == 0.01);
  {
    std::ofstream f(dir / "bad.csv");
    f << "a,DBI\n";
  }
  CHECK_THROWS_AS(read_score_csv(dir / "bad.csv"), Error);
  CHECK_THROWS_AS(read_score_csv(dir / "missing.csv"), Error);
}

TEST_CASE("score_directory with references") {
  testutil::TempDir dir("scoredir");
  std::filesystem::create_directories(dir / "in");
  std::filesystem::create_directories(dir / "ref");
  const auto a = testutil::plateau_ramp(64, 32, 8, 10, 1);
  const auto b = testutil::random_image(64, 32, 3);
  write_png(dir / "in/a.png", a);
  write_png(dir / "in/b.png", b);
  write_png(dir / "ref/a.png", a);
  write_png(dir / "ref/b.png", testutil::random_image(64, 32, 4));
  const auto ref = dir / "ref";
  const auto s = score_directory(dir / "in", &ref, {}, 2);
  REQUIRE(s.size() == 2);
  CHECK(s.at("a").at("band_edge_density") == band_edge_density(a));
  CHECK(is_identical(s.at("a").at("psnr")));
  CHECK(s.at("b").at("psnr") < 20.0);
}
