#pragma once

#include "wpcm/curve_models.hpp"
#include "wpcm/polynomial.hpp"
#include "wpcm/raster.hpp"

#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace wpcm {

struct ExtractionConfig {
  int poly_order = 40;
  double ridge_lambda = 1e-8;
  Basis basis = Basis::Chebyshev;
  double c_cutin = 0.15;
  double c_rated = 0.85;
  double bisection_tol = 1e-6;
  double nrm_tol = 1e-10;
  int nrm_max_iter = 100;
  int fallback_grid_points = 1001;
  double max_skipped_fraction = 0.10;

  void validate() const;
};

/// Per-column darkest-pixel trace of a neat-WPC image in data coordinates.
struct MappedTrace {
  std::vector<double> x;
  std::vector<double> y;
  int skipped_columns = 0;
};

/// Greyscale, then for each valid column the mean row of all pixels tied at the
/// column minimum (restricted to the valid row window), mapped to [0, 1]^2.
/// Columns with no pixel darker than white are skipped; more than
/// `max_skipped_fraction` skipped columns raise ExtractionFailure.
MappedTrace pixel_map(const WpcImage& img, const RasterConfig& raster,
                      double max_skipped_fraction = 0.10);

/// Ridge least squares: min sum (p(x_i) - y_i)^2 + lambda * ||coeffs||^2.
Polynomial fit_polynomial(std::span<const double> x, std::span<const double> y, int order,
                          double lambda, Basis basis = Basis::Chebyshev);
Polynomial fit_polynomial(std::span<const double> x, std::span<const double> y,
                          const ExtractionConfig& cfg);

using ScalarFn = std::function<double(double)>;

/// Root of g in [lo, hi] with g(lo) * g(hi) < 0, bracketed to width <= tol.
double bisection(const ScalarFn& g, double lo, double hi, double tol);

struct NewtonResult {
  double root = 0.0;
  int iterations = 0;
};

/// x <- x - g(x) / g'(x) until |g(x)| <= tol. Throws NonConvergence on
/// divergence, |g'| < 1e-12, or leaving [lo, hi].
NewtonResult newton_raphson(const ScalarFn& g, const ScalarFn& g_prime, double x0, double tol,
                            int max_iter, double lo = -std::numeric_limits<double>::infinity(),
                            double hi = std::numeric_limits<double>::infinity());

/// Bisection seeds (crossings of c_cutin / c_rated, first sign change from 0),
/// Newton on f_p' for the stationary points, grid fallbacks, plateau assembly.
PiecewiseWpc domain_knowledge_correction(const Polynomial& fp, const ExtractionConfig& cfg);

PiecewiseWpc extract(const WpcImage& img, const RasterConfig& raster, const ExtractionConfig& cfg);

void to_json(nlohmann::json& j, const ExtractionConfig& c);
void from_json(const nlohmann::json& j, ExtractionConfig& c);

}  // namespace wpcm
