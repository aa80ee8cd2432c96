#include "doctest.h"

#include "wpcm/errors.hpp"
#include "wpcm/io.hpp"
#include "wpcm/raster.hpp"

#include <cmath>
#include <filesystem>

using namespace wpcm;

namespace {

bool is_black(const WpcImage& img, int row, int col) {
  return img.at(0, row, col) == 0.0f && img.at(1, row, col) == 0.0f && img.at(2, row, col) == 0.0f;
}

bool all_white(const WpcImage& img) {
  for (float v : img.pixels)
    if (v != 1.0f) return false;
  return true;
}

}  // namespace

TEST_CASE("pixel frame endpoints") {
  const RasterConfig rc;
  CHECK(data_to_pixel(0.0, 1.0, rc) == std::pair{32, 31});
  CHECK(data_to_pixel(1.0, 0.0, rc) == std::pair{229, 227});
  CHECK(data_to_pixel(0.5, 0.5, rc) == std::pair{131, 129});
  CHECK(rc.valid_resolution() == 197);
  CHECK(rc.columns() == 198);
}

TEST_CASE("scaled frame") {
  const RasterConfig q = RasterConfig::scaled(0.25);
  CHECK(q.width == 64);
  CHECK(q.height == 64);
  CHECK(q.x_lo == 8);
  CHECK(q.x_hi == 57);
  CHECK(q.line_width == 1);
  CHECK_NOTHROW(q.validate());
  RasterConfig bad;
  bad.x_hi = 300;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("scatter rendering") {
  const RasterConfig rc;
  CHECK(all_white(render_scatter(ScatterSet{}, rc)));

  RasterConfig small = rc;
  small.marker_size = 2.0;
  ScatterSet one;
  one.points.push_back({0.0, 1.0, PointLabel::Normal});
  const WpcImage img = render_scatter(one, small);
  CHECK(is_black(img, 31, 32));
  CHECK(is_black(img, 30, 32));
  CHECK(is_black(img, 31, 33));
  CHECK_FALSE(is_black(img, 30, 31 + 3));
  int black = 0;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) black += is_black(img, r, c) ? 1 : 0;
  CHECK(black == 5);

  Rng rng(1);
  const ScatterSet s = synthesize_sparse(300, rng);
  CHECK(render_scatter(s, rc).pixels == render_scatter(s, rc).pixels);
}

TEST_CASE("curve rendering") {
  const RasterConfig rc;
  const WpcImage top = render_curve([](double) { return 1.0; }, rc);
  for (int col = rc.x_lo; col <= rc.x_hi; ++col) {
    for (int row = 0; row < rc.height; ++row) {
      const bool expect = row >= 31 && row <= 31 + rc.line_width - 1;
      CHECK(is_black(top, row, col) == expect);
    }
  }
  const WpcImage bottom = render_curve([](double) { return 0.0; }, rc);
  for (int col = rc.x_lo; col <= rc.x_hi; ++col) CHECK(is_black(bottom, 227, col));

  const WpcImage s = render_curve(WpcFunction::de(20.0, -10.0), rc);
  for (int col = rc.x_lo; col <= rc.x_hi; ++col) {
    bool any = false;
    for (int row = 0; row < rc.height; ++row) any = any || is_black(s, row, col);
    CHECK(any);
  }
  for (int row = 0; row < rc.height; ++row) {
    CHECK_FALSE(is_black(s, row, rc.x_lo - 1));
    CHECK_FALSE(is_black(s, row, rc.x_hi + 1));
  }
}

TEST_CASE("test-time marker size") {
  CHECK(marker_size_for_test(3528) == 1.0);
  CHECK(marker_size_for_test(882) == 2.0);
  CHECK(marker_size_for_test(1400) == doctest::Approx(std::sqrt(2.52)).epsilon(1e-15));
  for (long long n : {10LL, 100LL, 1400LL, 5000LL, 123457LL})
    CHECK(std::abs(marker_size_for_test(n) - std::sqrt(3528.0 / static_cast<double>(n))) <= 1e-14);
  CHECK_THROWS(marker_size_for_test(0));
}

TEST_CASE("greyscale conversion") {
  WpcImage img(2, 2, ImageRole::ScadaWpc);
  img.set_rgb(0, 1, 0.0f, 0.0f, 0.0f);
  img.set_rgb(1, 0, 0.3f, 0.3f, 0.3f);
  const GreyImage g = to_greyscale(img);
  CHECK(g.at(0, 0) == 1.0f);
  CHECK(g.at(0, 1) == 0.0f);
  CHECK(g.at(1, 0) == doctest::Approx(0.3f));
}

TEST_CASE("overlay and PNG round trip") {
  const std::string dir = output_dir_or("test_raster_out");
  std::filesystem::create_directories(dir);
  Rng rng(2);
  const ScatterSet s = synthesize_sparse(200, rng);
  const WpcImage ov = render_overlay(s, [](double x) { return x; }, RasterConfig{});
  CHECK(ov.role == ImageRole::Overlay);
  const std::string path = dir + "/overlay.png";
  write_png(path, ov);
  const WpcImage back = read_png(path);
  REQUIRE(back.width == 256);
  REQUIRE(back.height == 256);
  for (std::size_t i = 0; i < ov.pixels.size(); ++i)
    CHECK(std::abs(back.pixels[i] - ov.pixels[i]) <= 0.5f / 255.0f + 1e-6f);
  CHECK_THROWS(read_png(dir + "/missing.png"));
}
