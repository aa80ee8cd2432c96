#pragma once

#include "wpcm/curve_models.hpp"
#include "wpcm/synthesis.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace wpcm {

/// Pixel frame shared by the rasterizer and the pixel mapping.
///
/// Columns x_lo..x_hi hold normalized speed 0..1; rows y_lo..y_hi hold
/// normalized power 1..0 (row y_lo is the top of the plot).
struct RasterConfig {
  int width = 256;
  int height = 256;
  int x_lo = 32, x_hi = 229;
  int y_lo = 31, y_hi = 227;
  double marker_size = 6.0;    // plot-area units of the 256 px frame
  int line_width = 2;          // px
  double k_coeff = 0.07;       // marker-size proportionality coefficient
  double reference_points = 1400.0;
  double reference_marker = 6.0;

  /// Frame with every pixel constant multiplied by `factor` (rounded half up);
  /// line width scales too, with a floor of one pixel.
  static RasterConfig scaled(double factor);

  int columns() const { return x_hi - x_lo + 1; }
  /// Number of usable rows in the curve window.
  int valid_resolution() const { return y_hi - y_lo + 1; }
  double pixel_scale() const { return static_cast<double>(width) / 256.0; }
  void validate() const;

  bool operator==(const RasterConfig&) const = default;
};

enum class ImageRole { ScadaWpc, NeatWpc, Generated, Overlay };

/// height x width x 3 image, planar channel-major storage, intensities in [0, 1].
struct WpcImage {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // [c][row][col]
  ImageRole role = ImageRole::ScadaWpc;

  WpcImage() = default;
  WpcImage(int h, int w, ImageRole r, float fill = 1.0f)
      : height(h), width(w), pixels(static_cast<std::size_t>(3) * h * w, fill), role(r) {}

  float& at(int c, int row, int col) {
    return pixels[(static_cast<std::size_t>(c) * height + row) * width + col];
  }
  float at(int c, int row, int col) const {
    return pixels[(static_cast<std::size_t>(c) * height + row) * width + col];
  }
  void set_rgb(int row, int col, float r, float g, float b) {
    at(0, row, col) = r;
    at(1, row, col) = g;
    at(2, row, col) = b;
  }
};

struct GreyImage {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // [row][col]

  float at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

/// (column, row) for a point of the unit square; rounding is half-up.
std::pair<int, int> data_to_pixel(double x, double y, const RasterConfig& cfg);

/// Black filled disks on white; radius marker_size * pixel_scale / 2 px.
WpcImage render_scatter(const ScatterSet& s, const RasterConfig& cfg);

/// Connected black polyline through the curve value at every valid column.
WpcImage render_curve(const std::function<double(double)>& curve, const RasterConfig& cfg);
WpcImage render_curve(const WpcFunction& f, const RasterConfig& cfg);
WpcImage render_curve(const PiecewiseWpc& f, const RasterConfig& cfg);

/// Scatter in grey with the curve drawn over it in red.
WpcImage render_overlay(const ScatterSet& s, const std::function<double(double)>& curve,
                        const RasterConfig& cfg);

/// Test-time marker size that keeps K * MS_ref^2 * N_ref = MS^2 * n_data.
double marker_size_for_test(long long n_data, const RasterConfig& cfg = {});

/// Unweighted channel mean.
GreyImage to_greyscale(const WpcImage& img);

void write_png(const std::string& path, const WpcImage& img);
WpcImage read_png(const std::string& path, ImageRole role = ImageRole::Generated);

void to_json(nlohmann::json& j, const RasterConfig& c);
void from_json(const nlohmann::json& j, RasterConfig& c);

}  // namespace wpcm
