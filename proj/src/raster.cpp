#include "wpcm/raster.hpp"

#include "wpcm/errors.hpp"
#include "wpcm/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>

namespace wpcm {

namespace {

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

// Fractional row of normalized power y.
double power_to_row(double y, const RasterConfig& cfg) {
  return cfg.y_lo + (1.0 - y) * (cfg.y_hi - cfg.y_lo);
}

void paint_disk(WpcImage& img, int col, int row, double radius, float r, float g, float b) {
  const int reach = static_cast<int>(std::floor(radius));
  const double r2 = radius * radius;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      if (dx * dx + dy * dy > r2 && (dx != 0 || dy != 0)) continue;
      const int rr = row + dy, cc = col + dx;
      if (rr < 0 || rr >= img.height || cc < 0 || cc >= img.width) continue;
      img.set_rgb(rr, cc, r, g, b);
    }
  }
}

void paint_curve(WpcImage& img, const std::function<double(double)>& curve, const RasterConfig& cfg,
                 float r, float g, float b) {
  const int n = cfg.columns();
  const double span = cfg.x_hi - cfg.x_lo;
  std::vector<double> rho(n);
  for (int i = 0; i < n; ++i) rho[i] = power_to_row(clamp_unit(curve(i / span)), cfg);
  for (int i = 0; i < n; ++i) {
    // Rows covered by the polyline inside this column: from the midpoint with
    // the left neighbour to the midpoint with the right neighbour.
    double lo = rho[i], hi = rho[i];
    if (i > 0) {
      const double mid = 0.5 * (rho[i - 1] + rho[i]);
      lo = std::min(lo, mid);
      hi = std::max(hi, mid);
    }
    if (i + 1 < n) {
      const double mid = 0.5 * (rho[i] + rho[i + 1]);
      lo = std::min(lo, mid);
      hi = std::max(hi, mid);
    }
    const int top = round_half_up(lo);
    const int bottom = round_half_up(hi) + cfg.line_width - 1;
    const int col = cfg.x_lo + i;
    for (int row = std::max(top, 0); row <= std::min(bottom, img.height - 1); ++row)
      img.set_rgb(row, col, r, g, b);
  }
}

}  // namespace

RasterConfig RasterConfig::scaled(double factor) {
  RasterConfig c;
  c.width = round_half_up(c.width * factor);
  c.height = round_half_up(c.height * factor);
  c.x_lo = round_half_up(c.x_lo * factor);
  c.x_hi = round_half_up(c.x_hi * factor);
  c.y_lo = round_half_up(c.y_lo * factor);
  c.y_hi = round_half_up(c.y_hi * factor);
  c.line_width = std::max(1, round_half_up(c.line_width * factor));
  return c;
}

void RasterConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("RasterConfig: empty image");
  if (!(0 <= x_lo && x_lo < x_hi && x_hi < width))
    throw ConfigError("RasterConfig: x pixel range outside image");
  if (!(0 <= y_lo && y_lo < y_hi && y_hi < height))
    throw ConfigError("RasterConfig: y pixel range outside image");
  if (line_width < 1) throw ConfigError("RasterConfig: line_width must be >= 1");
  if (!(k_coeff > 0.0)) throw ConfigError("RasterConfig: K must be positive");
  if (!(marker_size > 0.0)) throw ConfigError("RasterConfig: marker_size must be positive");
}

std::pair<int, int> data_to_pixel(double x, double y, const RasterConfig& cfg) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
    throw DomainError("data_to_pixel: point outside the unit square");
  const int col = round_half_up(cfg.x_lo + x * (cfg.x_hi - cfg.x_lo));
  const int row = round_half_up(power_to_row(y, cfg));
  return {col, row};
}

WpcImage render_scatter(const ScatterSet& s, const RasterConfig& cfg) {
  cfg.validate();
  WpcImage img(cfg.height, cfg.width, ImageRole::ScadaWpc);
  const double radius = 0.5 * cfg.marker_size * cfg.pixel_scale();
  for (const ScatterPoint& p : s.points) {
    const auto [col, row] = data_to_pixel(p.x, p.y, cfg);
    paint_disk(img, col, row, radius, 0.0f, 0.0f, 0.0f);
  }
  return img;
}

WpcImage render_curve(const std::function<double(double)>& curve, const RasterConfig& cfg) {
  cfg.validate();
  WpcImage img(cfg.height, cfg.width, ImageRole::NeatWpc);
  paint_curve(img, curve, cfg, 0.0f, 0.0f, 0.0f);
  return img;
}

WpcImage render_curve(const WpcFunction& f, const RasterConfig& cfg) {
  return render_curve([&f](double x) { return eval_wpc_function(f, x); }, cfg);
}

WpcImage render_curve(const PiecewiseWpc& f, const RasterConfig& cfg) {
  return render_curve([&f](double x) { return eval_piecewise(f, x); }, cfg);
}

WpcImage render_overlay(const ScatterSet& s, const std::function<double(double)>& curve,
                        const RasterConfig& cfg) {
  cfg.validate();
  WpcImage img(cfg.height, cfg.width, ImageRole::Overlay);
  const double radius = 0.5 * marker_size_for_test(std::max<long long>(1, s.size()), cfg) *
                        cfg.pixel_scale();
  for (const ScatterPoint& p : s.points) {
    const auto [col, row] = data_to_pixel(p.x, p.y, cfg);
    paint_disk(img, col, row, radius, 0.55f, 0.55f, 0.55f);
  }
  paint_curve(img, curve, cfg, 0.85f, 0.1f, 0.1f);
  return img;
}

double marker_size_for_test(long long n_data, const RasterConfig& cfg) {
  if (n_data < 1) throw ConfigError("marker_size_for_test: n_data must be >= 1");
  const double area = cfg.reference_points * cfg.reference_marker * cfg.reference_marker;
  return std::sqrt(cfg.k_coeff * area / static_cast<double>(n_data));
}

GreyImage to_greyscale(const WpcImage& img) {
  GreyImage g{img.height, img.width, std::vector<float>(static_cast<std::size_t>(img.height) * img.width)};
  const std::size_t plane = g.pixels.size();
  for (std::size_t i = 0; i < plane; ++i)
    g.pixels[i] = (img.pixels[i] + img.pixels[plane + i] + img.pixels[2 * plane + i]) / 3.0f;
  return g;
}

void write_png(const std::string& path, const WpcImage& img) {
  std::vector<unsigned char> rgb(static_cast<std::size_t>(img.height) * img.width * 3);
  for (int row = 0; row < img.height; ++row)
    for (int col = 0; col < img.width; ++col)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(img.at(c, row, col), 0.0f, 1.0f);
        rgb[(static_cast<std::size_t>(row) * img.width + col) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode failed: ") + image.message);
  std::vector<unsigned char> buf(size);
  if (!png_image_write_to_memory(&image, buf.data(), &size, 0, rgb.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode failed: ") + image.message);
  atomic_write(
      path,
      [&](std::ostream& out) { out.write(reinterpret_cast<const char*>(buf.data()), size); },
      true);
}

WpcImage read_png(const std::string& path, ImageRole role) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw CorruptFile("cannot read PNG " + path + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr))
    throw CorruptFile("cannot decode PNG " + path + ": " + image.message);
  WpcImage img(static_cast<int>(image.height), static_cast<int>(image.width), role);
  for (int row = 0; row < img.height; ++row)
    for (int col = 0; col < img.width; ++col)
      for (int c = 0; c < 3; ++c)
        img.at(c, row, col) = rgb[(static_cast<std::size_t>(row) * img.width + col) * 3 + c] / 255.0f;
  return img;
}

void to_json(nlohmann::json& j, const RasterConfig& c) {
  j = {{"width", c.width},         {"height", c.height},
       {"x_pixel_range", {c.x_lo, c.x_hi}}, {"y_pixel_range", {c.y_lo, c.y_hi}},
       {"marker_size", c.marker_size}, {"line_width", c.line_width},
       {"k_coeff", c.k_coeff}};
}

void from_json(const nlohmann::json& j, RasterConfig& c) {
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.height);
  if (j.contains("x_pixel_range")) {
    c.x_lo = j["x_pixel_range"].at(0).get<int>();
    c.x_hi = j["x_pixel_range"].at(1).get<int>();
  }
  if (j.contains("y_pixel_range")) {
    c.y_lo = j["y_pixel_range"].at(0).get<int>();
    c.y_hi = j["y_pixel_range"].at(1).get<int>();
  }
  c.marker_size = j.value("marker_size", c.marker_size);
  c.line_width = j.value("line_width", c.line_width);
  c.k_coeff = j.value("k_coeff", c.k_coeff);
  c.validate();
}

}  // namespace wpcm
