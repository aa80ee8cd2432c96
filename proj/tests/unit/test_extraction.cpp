#include "doctest.h"

#include "wpcm/errors.hpp"
#include "wpcm/extraction.hpp"

#include <algorithm>
#include <cmath>

using namespace wpcm;

namespace {

struct RoundTrip {
  double sup = 0.0;
  double rmse = 0.0;
  PiecewiseWpc curve;
};

RoundTrip round_trip(const WpcFunction& f, const RasterConfig& rc, const ExtractionConfig& ec = {}) {
  RoundTrip r;
  r.curve = extract(render_curve(f, rc), rc, ec);
  double se = 0.0;
  const int n = 2001;
  for (int i = 0; i < n; ++i) {
    const double x = i / static_cast<double>(n - 1);
    const double e = eval_piecewise(r.curve, x) - eval_wpc_function(f, x);
    se += e * e;
    if (x >= r.curve.x_cutin + 0.02 && x <= r.curve.x_rated - 0.02) r.sup = std::max(r.sup, std::abs(e));
  }
  r.rmse = std::sqrt(se / n);
  return r;
}

}  // namespace

TEST_CASE("pixel map of a two-row column") {
  const RasterConfig rc;
  WpcImage img(rc.height, rc.width, ImageRole::NeatWpc);
  for (int col = rc.x_lo; col <= rc.x_hi; ++col) {
    img.set_rgb(100, col, 0, 0, 0);
    img.set_rgb(101, col, 0, 0, 0);
  }
  const MappedTrace t = pixel_map(img, rc);
  REQUIRE(t.x.size() == static_cast<std::size_t>(rc.columns()));
  CHECK(t.x.front() == 0.0);
  CHECK(t.x.back() == 1.0);
  const double expected = 1.0 - (100.5 - rc.y_lo) / (rc.y_hi - rc.y_lo);
  for (double y : t.y) CHECK(y == doctest::Approx(expected).epsilon(1e-12));

  WpcImage top(rc.height, rc.width, ImageRole::NeatWpc);
  WpcImage bottom(rc.height, rc.width, ImageRole::NeatWpc);
  for (int col = rc.x_lo; col <= rc.x_hi; ++col) {
    top.set_rgb(31, col, 0, 0, 0);
    bottom.set_rgb(227, col, 0, 0, 0);
  }
  CHECK(pixel_map(top, rc).y.front() == 1.0);
  CHECK(pixel_map(bottom, rc).y.front() == 0.0);
}

TEST_CASE("pixel map of a rendered curve stays within the line width") {
  const RasterConfig rc;
  Rng rng(21);
  for (int k = 0; k < 10; ++k) {
    const WpcFunction f = sample_wpc_function(rng);
    const MappedTrace t = pixel_map(render_curve(f, rc), rc);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < t.x.size(); ++i)
      worst = std::max(worst, std::abs(t.y[i] - eval_wpc_function(f, t.x[i])));
    CHECK(worst <= (rc.line_width + 1) / 196.0);
  }
}

TEST_CASE("white image fails extraction") {
  const RasterConfig rc;
  CHECK_THROWS_AS(extract(WpcImage(rc.height, rc.width, ImageRole::Generated), rc, {}), ExtractionFailure);
}

TEST_CASE("ridge polynomial fit") {
  std::vector<double> x, y, c;
  for (int i = 0; i <= 50; ++i) {
    const double v = i / 50.0;
    x.push_back(v);
    y.push_back(3 * v * v - 2 * v * v * v);
    c.push_back(0.5);
  }
  const Polynomial mono = fit_polynomial(x, y, 3, 0.0, Basis::Monomial);
  const std::vector<double> want{0, 0, 3, -2};
  for (int k = 0; k < 4; ++k) CHECK(std::abs(mono.coeffs()[k] - want[k]) <= 1e-8);

  const Polynomial cheb = fit_polynomial(x, y, 3, 0.0, Basis::Chebyshev).to_monomial();
  for (int k = 0; k < 4; ++k) CHECK(std::abs(cheb.coeffs()[k] - want[k]) <= 1e-8);

  const Polynomial flat = fit_polynomial(x, c, 5, 0.0, Basis::Monomial);
  CHECK(std::abs(flat.coeffs()[0] - 0.5) <= 1e-8);
  for (int k = 1; k <= 5; ++k) CHECK(std::abs(flat.coeffs()[k]) <= 1e-8);

  const Polynomial squashed = fit_polynomial(x, y, 3, 1e12, Basis::Monomial);
  for (double v : squashed.coeffs()) CHECK(std::abs(v) < 1e-6);

  CHECK_THROWS_AS(fit_polynomial(std::vector<double>{0.1, 0.2}, std::vector<double>{0.1, 0.2}, 5, 0.0), ConfigError);
}

TEST_CASE("bisection") {
  CHECK(std::abs(bisection([](double x) { return x - 0.5; }, 0, 1, 1e-6) - 0.5) <= 1e-6);
  const double r = bisection([](double x) { return 3 * x * x - 2 * x * x * x - 0.15; }, 0, 1, 1e-6);
  double grid_root = 0.0;
  for (int i = 0; i <= 1000000; ++i) {
    const double v = i / 1e6;
    if (3 * v * v - 2 * v * v * v >= 0.15) {
      grid_root = v;
      break;
    }
  }
  CHECK(std::abs(r - grid_root) <= 2e-6);
  CHECK_THROWS_AS(bisection([](double x) { return x + 1.0; }, 0, 1, 1e-6), NonConvergence);
}

TEST_CASE("Newton-Raphson") {
  const auto sq = newton_raphson([](double x) { return x * x - 2; }, [](double x) { return 2 * x; }, 1.5, 1e-12, 50);
  CHECK(std::abs(sq.root - std::sqrt(2.0)) <= 1e-10);
  CHECK(sq.iterations <= 6);

  const auto ss = newton_raphson([](double x) { return 6 * x - 6 * x * x; }, [](double x) { return 6 - 12 * x; },
                                 0.2453, 1e-12, 50);
  CHECK(std::abs(ss.root) <= 1e-10);

  const auto fixed = newton_raphson([](double x) { return x - 0.3; }, [](double) { return 1.0; }, 0.3, 1e-12, 50);
  CHECK(fixed.root == 0.3);
  CHECK(fixed.iterations == 0);

  CHECK_THROWS_AS(newton_raphson([](double x) { return x * x + 1; }, [](double) { return 0.0; }, 0.0, 1e-12, 10),
                  NonConvergence);
}

TEST_CASE("domain-knowledge correction") {
  const ExtractionConfig ec;
  const PiecewiseWpc s = domain_knowledge_correction(Polynomial::monomial({0, 0, 3, -2}), ec);
  CHECK(std::abs(s.x_cutin) <= 1e-9);
  CHECK(std::abs(s.x_rated - 1.0) <= 1e-9);
  CHECK(std::abs(s.p_cutin) <= 1e-9);
  CHECK(std::abs(s.p_rated - 1.0) <= 1e-9);

  const PiecewiseWpc low = domain_knowledge_correction(Polynomial::monomial({0.0, 0.6}), ec);
  CHECK(low.x_rated == 1.0);
  CHECK_FALSE(low.rated_converged);
}

TEST_CASE("round trip on 50 sampled curves") {
  const RasterConfig rc;
  Rng rng(1000);
  double max_sup = 0.0, max_rmse = 0.0;
  for (int k = 0; k < 50; ++k) {
    const WpcFunction f = sample_wpc_function(rng);
    const RoundTrip r = round_trip(f, rc);
    max_sup = std::max(max_sup, r.sup);
    max_rmse = std::max(max_rmse, r.rmse);
    const Polynomial d = r.curve.poly.derivative();
    if (r.curve.cutin_converged) CHECK(std::abs(d(r.curve.x_cutin)) <= 1e-8);
    if (r.curve.rated_converged) CHECK(std::abs(d(r.curve.x_rated)) <= 1e-8);
    CHECK(eval_piecewise(r.curve, 0.0) == r.curve.p_cutin);
    CHECK(eval_piecewise(r.curve, 1.0) == r.curve.p_rated);
    if (eval_wpc_function(f, 0.1) < 1e-4) CHECK(r.curve.p_cutin <= (rc.line_width - 1) / 197.0 + 1.0 / 196.0);
  }
  CHECK(max_sup <= 2.0 / rc.valid_resolution());
  CHECK(max_rmse <= 0.006);
}

TEST_CASE("extraction config validation and JSON") {
  ExtractionConfig bad;
  bad.c_cutin = 0.9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  ExtractionConfig c;
  c.poly_order = 12;
  c.basis = Basis::Monomial;
  nlohmann::json j = c;
  ExtractionConfig back;
  from_json(j, back);
  CHECK(back.poly_order == 12);
  CHECK(back.basis == Basis::Monomial);
}

TEST_CASE("doubling the frame at fixed line width halves the round-trip error") {
  auto mean_sup = [](double factor) {
    RasterConfig rc = RasterConfig::scaled(factor);
    rc.line_width = 2;
    Rng rng(2000);
    double total = 0.0;
    for (int k = 0; k < 20; ++k) total += round_trip(sample_wpc_function(rng), rc).sup;
    return total / 20;
  };
  const double coarse = mean_sup(0.5), base = mean_sup(1.0), fine = mean_sup(2.0);
  MESSAGE("mean sup error at 128/256/512 px: " << coarse << " " << base << " " << fine);
  CHECK(base <= 0.5 * coarse);
  CHECK(fine <= 0.5 * base);
}
