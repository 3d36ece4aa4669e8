#include <doctest.h>

#include <atomic>
#include <mutex>
#include <random>
#include <set>

#include "deband/error.hpp"
#include "deband/pipeline.hpp"
#include "test_util.hpp"

using namespace deband;

namespace {

ImageBuffer add_clamped(const ImageBuffer& img, int k) {
  ImageBuffer out = img;
  for (auto& v : out.data()) v = static_cast<std::uint8_t>(std::min(255, v + k));
  return out;
}

// 32-pixel tiles at stride 16: many small tiles, same code path.
PipelineOptions small_tiles(unsigned threads = 1) {
  PipelineOptions o;
  o.tile = 32;
  o.stride = 16;
  o.align = 32;
  o.threads = threads;
  return o;
}

}  // namespace

TEST_CASE("identity round trip in both modes") {
  const IdentityBackend id;
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> dim(1, 600);
  for (int i = 0; i < 12; ++i) {
    const int w = i == 0 ? 1 : dim(rng), h = i == 0 ? 1 : dim(rng);
    const auto img = testutil::random_image(w, h, i);
    INFO(w << "x" << h);
    CHECK(deband_full(id, img) == img);
    CHECK(deband_weighted(id, img) == img);
  }
}

TEST_CASE("dimensions are preserved for odd sizes") {
  const FunctionBackend inv("invert", [](const ImageBuffer& img) {
    ImageBuffer o = img;
    for (auto& v : o.data()) v = static_cast<std::uint8_t>(255 - v);
    return o;
  });
  for (auto [w, h] : {std::pair{1, 1}, std::pair{7, 300}, std::pair{257, 3}}) {
    for (auto mode : {PipelineMode::full, PipelineMode::weighted}) {
      const auto out = deband::deband(inv, mode, testutil::random_image(w, h, 2));
      CHECK(out.width() == w);
      CHECK(out.height() == h);
    }
  }
}

TEST_CASE("FHD weighted run calls the backend once per tile") {
  std::atomic<int> calls{0};
  std::mutex mu;
  std::set<std::pair<int, int>> sizes;
  const FunctionBackend counter("count", [&](const ImageBuffer& img) {
    ++calls;
    std::lock_guard lock(mu);
    sizes.insert({img.width(), img.height()});
    return img;
  });
  const ImageBuffer img(1920, 1080);
  PipelineOptions o;
  o.threads = 4;
  const auto out = deband_weighted(counter, img, o);
  CHECK(calls == 135);
  CHECK(sizes == std::set<std::pair<int, int>>{{256, 256}});
  CHECK(out.width() == 1920);
  CHECK(out.height() == 1080);

  calls = 0;
  sizes.clear();
  deband_full(counter, img, o);
  CHECK(calls == 1);
  CHECK(sizes == std::set<std::pair<int, int>>{{2048, 1280}});

  calls = 0;
  deband_full(counter, ImageBuffer(256, 256), o);
  CHECK(calls == 1);
  CHECK(sizes.count({256, 256}) == 1);
}

TEST_CASE("add-10 backend shifts the image") {
  const FunctionBackend add10("add10", [](const ImageBuffer& img) { return add_clamped(img, 10); });
  const auto img = testutil::random_image(300, 200, 3);
  const auto want = add_clamped(img, 10);
  CHECK(deband_weighted(add10, img) == want);
  CHECK(deband_full(add10, img) == want);
}

TEST_CASE("weighted output ignores concurrency") {
  // Position-dependent backend so every tile returns something different.
  const FunctionBackend grad("grad", [](const ImageBuffer& img) {
    ImageBuffer o = img;
    for (int y = 0; y < o.height(); ++y)
      for (int x = 0; x < o.width(); ++x)
        for (int c = 0; c < 3; ++c)
          o.at(x, y, c) = static_cast<std::uint8_t>((img.at(x, y, c) + x * 3 + y * 5 + c) & 255);
    return o;
  });
  const auto img = testutil::random_image(150, 90, 8);
  const auto one = deband_weighted(grad, img, small_tiles(1));
  CHECK(deband_weighted(grad, img, small_tiles(3)) == one);
  CHECK(deband_weighted(grad, img, small_tiles(16)) == one);
}

TEST_CASE("per-pixel backends agree between modes") {
  const FunctionBackend curve("curve", [](const ImageBuffer& img) {
    ImageBuffer o = img;
    for (auto& v : o.data()) v = static_cast<std::uint8_t>((v * v) / 255);
    return o;
  });
  for (auto [w, h] : {std::pair{300, 200}, std::pair{64, 500}}) {
    const auto img = testutil::random_image(w, h, w);
    CHECK(deband_full(curve, img) == deband_weighted(curve, img));
  }
}

TEST_CASE("classic backend through the pipeline") {
  const ClassicBackend classic;
  const auto flat = testutil::constant_image(130, 70, 40, 41, 42);
  CHECK(deband::deband(classic, PipelineMode::full, flat) == flat);
  CHECK(deband::deband(classic, PipelineMode::weighted, flat) == flat);
}

TEST_CASE("backend failures name the tile") {
  std::atomic<int> calls{0};
  const FunctionBackend flaky("flaky", [&](const ImageBuffer& img) -> ImageBuffer {
    if (++calls == 3) throw Error(ErrorCode::processing, "boom");
    return img;
  });
  try {
    deband_weighted(flaky, ImageBuffer(512, 512));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("tile at (") != std::string::npos);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
  const FunctionBackend shrink("shrink", [](const ImageBuffer&) { return ImageBuffer(8, 8); });
  CHECK_THROWS_AS(deband_full(shrink, ImageBuffer(10, 10)), Error);
  CHECK_THROWS_AS(deband_weighted(shrink, ImageBuffer(10, 10)), Error);
}

TEST_CASE("option validation") {
  const IdentityBackend id;
  PipelineOptions o;
  o.stride = 100;
  CHECK_THROWS_AS(deband_weighted(id, ImageBuffer(10, 10), o), Error);
  o = {};
  o.align = 0;
  CHECK_THROWS_AS(deband_full(id, ImageBuffer(10, 10), o), Error);
  CHECK(std::string(mode_name(PipelineMode::weighted)) == "weighted");
}
