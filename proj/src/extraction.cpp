#include "wpcm/extraction.hpp"

#include "wpcm/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace wpcm {

void ExtractionConfig::validate() const {
  if (!(0.0 < c_cutin && c_cutin < c_rated && c_rated < 1.0))
    throw ConfigError("ExtractionConfig: need 0 < c_cutin < c_rated < 1");
  if (poly_order < 3) throw ConfigError("ExtractionConfig: poly_order must be >= 3");
  if (!(ridge_lambda >= 0.0)) throw ConfigError("ExtractionConfig: ridge_lambda must be >= 0");
  if (fallback_grid_points < 2) throw ConfigError("ExtractionConfig: fallback grid too small");
  if (nrm_max_iter < 1) throw ConfigError("ExtractionConfig: nrm_max_iter must be >= 1");
}

MappedTrace pixel_map(const WpcImage& img, const RasterConfig& raster,
                      double max_skipped_fraction) {
  raster.validate();
  if (img.height != raster.height || img.width != raster.width)
    throw ConfigError("pixel_map: image size does not match the raster frame");
  const GreyImage grey = to_greyscale(img);
  MappedTrace trace;
  const double x_span = raster.x_hi - raster.x_lo;
  const double y_span = raster.y_hi - raster.y_lo;
  for (int col = raster.x_lo; col <= raster.x_hi; ++col) {
    float darkest = 1.0f;
    for (int row = raster.y_lo; row <= raster.y_hi; ++row) darkest = std::min(darkest, grey.at(row, col));
    if (!(darkest < 1.0f)) {
      ++trace.skipped_columns;
      continue;
    }
    double sum = 0.0;
    int ties = 0;
    for (int row = raster.y_lo; row <= raster.y_hi; ++row) {
      if (grey.at(row, col) == darkest) {
        sum += row;
        ++ties;
      }
    }
    const double row = sum / ties;
    trace.x.push_back((col - raster.x_lo) / x_span);
    trace.y.push_back(1.0 - (row - raster.y_lo) / y_span);
  }
  if (trace.skipped_columns > max_skipped_fraction * raster.columns())
    throw ExtractionFailure("pixel_map: " + std::to_string(trace.skipped_columns) + " of " +
                            std::to_string(raster.columns()) +
                            " columns have no trace; generated image too faint");
  return trace;
}

Polynomial fit_polynomial(std::span<const double> x, std::span<const double> y, int order,
                          double lambda, Basis basis) {
  if (x.size() != y.size()) throw ConfigError("fit_polynomial: x and y differ in length");
  if (order < 0) throw ConfigError("fit_polynomial: negative order");
  const Eigen::Index m = static_cast<Eigen::Index>(x.size());
  const Eigen::Index n = order + 1;
  if (m < n)
    throw ConfigError("fit_polynomial: need at least " + std::to_string(n) + " points, got " +
                      std::to_string(m));
  if (!(lambda >= 0.0)) throw ConfigError("fit_polynomial: lambda must be >= 0");

  const Eigen::Index rows = lambda > 0.0 ? m + n : m;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < m; ++i) {
    Polynomial::basis_row(basis, x[i], row);
    for (Eigen::Index k = 0; k < n; ++k) a(i, k) = row[k];
    b(i) = y[i];
  }
  // Ridge term as extra rows sqrt(lambda) * I; QR of the stacked system avoids
  // squaring the condition number as the normal equations would.
  if (lambda > 0.0) a.bottomRows(n).diagonal().setConstant(std::sqrt(lambda));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < n)
    throw NumericalRankError("fit_polynomial: design matrix has numerical rank " +
                             std::to_string(qr.rank()) + " < " + std::to_string(n) +
                             "; use ridge_lambda > 0 or a lower order");
  const Eigen::VectorXd c = qr.solve(b);
  return {basis, std::vector<double>(c.data(), c.data() + n)};
}

Polynomial fit_polynomial(std::span<const double> x, std::span<const double> y,
                          const ExtractionConfig& cfg) {
  return fit_polynomial(x, y, cfg.poly_order, cfg.ridge_lambda, cfg.basis);
}

double bisection(const ScalarFn& g, double lo, double hi, double tol) {
  double glo = g(lo);
  const double ghi = g(hi);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if (!(glo * ghi < 0.0)) throw NonConvergence("bisection: no sign change on the bracket");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

NewtonResult newton_raphson(const ScalarFn& g, const ScalarFn& g_prime, double x0, double tol,
                            int max_iter, double lo, double hi) {
  double x = x0;
  for (int it = 0; it <= max_iter; ++it) {
    const double gx = g(x);
    if (!std::isfinite(gx)) throw NonConvergence("newton_raphson: non-finite residual");
    if (std::abs(gx) <= tol) return {x, it};
    if (it == max_iter) break;
    const double slope = g_prime(x);
    if (!(std::abs(slope) >= 1e-12)) throw NonConvergence("newton_raphson: derivative near zero");
    x -= gx / slope;
    if (!(x >= lo && x <= hi)) throw NonConvergence("newton_raphson: iterate left the domain");
  }
  throw NonConvergence("newton_raphson: no convergence in " + std::to_string(max_iter) +
                       " iterations");
}

namespace {

// First crossing of `level` scanning [0, 1] from the left, refined by bisection.
std::optional<double> first_crossing(const Polynomial& fp, double level, const ExtractionConfig& cfg) {
  const int n = cfg.fallback_grid_points;
  double prev_x = 0.0;
  double prev_g = fp(0.0) - level;
  if (prev_g == 0.0) return 0.0;
  for (int i = 1; i < n; ++i) {
    const double x = static_cast<double>(i) / (n - 1);
    const double g = fp(x) - level;
    if (g == 0.0) return x;
    if ((g < 0.0) != (prev_g < 0.0))
      return bisection([&](double t) { return fp(t) - level; }, prev_x, x, cfg.bisection_tol);
    prev_x = x;
    prev_g = g;
  }
  return std::nullopt;
}

double argmin_abs_on_grid(const Polynomial& dfp, double lo, double hi, int points) {
  double best_x = lo, best = std::abs(dfp(lo));
  for (int i = 1; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    const double v = std::abs(dfp(x));
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

struct Stationary {
  double x;
  bool converged;
};

// Stationary point of fp reached by Newton on fp' from `seed`; it must lie on
// the side of the seed given by `leftward` (cut-in below, rated above).
Stationary locate_stationary(const Polynomial& dfp, const Polynomial& d2fp, double seed,
                             bool leftward, const ExtractionConfig& cfg) {
  const double lo = leftward ? 0.0 : seed;
  const double hi = leftward ? seed : 1.0;
  try {
    const NewtonResult r = newton_raphson([&](double t) { return dfp(t); },
                                          [&](double t) { return d2fp(t); }, seed, cfg.nrm_tol,
                                          cfg.nrm_max_iter, 0.0, 1.0);
    if (r.root >= lo - cfg.bisection_tol && r.root <= hi + cfg.bisection_tol)
      return {std::clamp(r.root, 0.0, 1.0), true};
  } catch (const NonConvergence&) {
  }
  return {argmin_abs_on_grid(dfp, lo, hi, cfg.fallback_grid_points), false};
}

}  // namespace

PiecewiseWpc domain_knowledge_correction(const Polynomial& fp, const ExtractionConfig& cfg) {
  cfg.validate();
  if (fp.empty()) throw ConfigError("domain_knowledge_correction: empty polynomial");
  const Polynomial dfp = fp.derivative();
  const Polynomial d2fp = dfp.derivative();

  Stationary cutin{0.0, false};
  if (const auto seed = first_crossing(fp, cfg.c_cutin, cfg))
    cutin = locate_stationary(dfp, d2fp, *seed, true, cfg);

  Stationary rated{1.0, false};
  if (const auto seed = first_crossing(fp, cfg.c_rated, cfg))
    rated = locate_stationary(dfp, d2fp, *seed, false, cfg);

  if (!(cutin.x < rated.x)) {
    // Degenerate fit (e.g. a decreasing trace): keep the whole polynomial.
    cutin = {0.0, false};
    rated = {1.0, false};
  }
  return PiecewiseWpc::assemble(fp, cutin.x, rated.x, cutin.converged, rated.converged);
}

PiecewiseWpc extract(const WpcImage& img, const RasterConfig& raster, const ExtractionConfig& cfg) {
  cfg.validate();
  const MappedTrace trace = pixel_map(img, raster, cfg.max_skipped_fraction);
  if (static_cast<int>(trace.x.size()) < cfg.poly_order + 1)
    throw ExtractionFailure("extract: only " + std::to_string(trace.x.size()) +
                            " mapped points for a polynomial of order " +
                            std::to_string(cfg.poly_order));
  return domain_knowledge_correction(fit_polynomial(trace.x, trace.y, cfg), cfg);
}

void to_json(nlohmann::json& j, const ExtractionConfig& c) {
  j = {{"poly_order", c.poly_order},
       {"ridge_lambda", c.ridge_lambda},
       {"basis", std::string(to_string(c.basis))},
       {"c_cutin", c.c_cutin},
       {"c_rated", c.c_rated},
       {"bisection_tol", c.bisection_tol},
       {"nrm_tol", c.nrm_tol},
       {"nrm_max_iter", c.nrm_max_iter},
       {"fallback_grid_points", c.fallback_grid_points},
       {"max_skipped_fraction", c.max_skipped_fraction}};
}

void from_json(const nlohmann::json& j, ExtractionConfig& c) {
  c.poly_order = j.value("poly_order", c.poly_order);
  c.ridge_lambda = j.value("ridge_lambda", c.ridge_lambda);
  c.basis = basis_from_string(j.value("basis", std::string(to_string(c.basis))));
  c.c_cutin = j.value("c_cutin", c.c_cutin);
  c.c_rated = j.value("c_rated", c.c_rated);
  c.bisection_tol = j.value("bisection_tol", c.bisection_tol);
  c.nrm_tol = j.value("nrm_tol", c.nrm_tol);
  c.nrm_max_iter = j.value("nrm_max_iter", c.nrm_max_iter);
  c.fallback_grid_points = j.value("fallback_grid_points", c.fallback_grid_points);
  c.max_skipped_fraction = j.value("max_skipped_fraction", c.max_skipped_fraction);
  c.validate();
}

}  // namespace wpcm
