#include "doctest.h"

#include "wpcm/curve_models.hpp"
#include "wpcm/errors.hpp"
#include "wpcm/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

using namespace wpcm;

TEST_CASE("DE closed form and derivative") {
  const auto f = WpcFunction::de(10.0, -8.0);
  CHECK(eval_wpc_function(f, 0.0) == doctest::Approx(std::exp(-10.0)).epsilon(1e-12));
  CHECK(eval_wpc_function(f, 1.0) == doctest::Approx(0.996651).epsilon(1e-6));
  CHECK(wpc_derivative(f, 0.0) == doctest::Approx(80.0 * std::exp(-10.0)).epsilon(1e-12));
  const double h = 1e-6;
  const double fd = (eval_wpc_function(f, 0.5 + h) - eval_wpc_function(f, 0.5 - h)) / (2 * h);
  CHECK(std::abs(fd - wpc_derivative(f, 0.5)) <= 1e-5 * std::abs(fd));
  CHECK(eval_wpc_function(f, 0.4) < eval_wpc_function(f, 0.5));
  CHECK(eval_wpc_function(f, 0.5) < eval_wpc_function(f, 0.6));
  CHECK_THROWS_AS(eval_wpc_function(f, 1.5), DomainError);
}

TEST_CASE("ADE derivative matches finite differences") {
  const auto f = WpcFunction::ade(5.0, 12.0, -2.0, 15.0);
  for (double x : {0.2, 0.5, 0.8}) {
    const double h = 1e-6;
    const double fd = (eval_wpc_function(f, x + h) - eval_wpc_function(f, x - h)) / (2 * h);
    CHECK(std::abs(fd - wpc_derivative(f, x)) <= 1e-5 * std::max(1e-3, std::abs(fd)));
  }
}

TEST_CASE("sampled ground truths stay in range and pass the shape check") {
  Rng rng(0);
  int de = 0;
  for (int i = 0; i < 1000; ++i) {
    const WpcFunction f = sample_wpc_function(rng);
    CHECK(passes_shape_check(f));
    if (f.family == Family::DE) {
      ++de;
      CHECK(f.params[0] >= 10.0);
      CHECK(f.params[0] <= 50.0);
      CHECK(f.params[1] >= -15.0);
      CHECK(f.params[1] <= -8.0);
    } else {
      CHECK(f.params[0] == 5.0);
      CHECK(f.params[3] == 15.0);
    }
    for (int k = 0; k <= 20; ++k) {
      const double y = eval_wpc_function(f, k / 20.0);
      CHECK(y > 0.0);
      CHECK(y <= 1.0);
    }
  }
  CHECK(de > 400);
  CHECK(de < 600);

  Rng a(7), b(7);
  CHECK(sample_wpc_function(a) == sample_wpc_function(b));
}

TEST_CASE("piecewise curve plateaus") {
  const auto pw = PiecewiseWpc::assemble(Polynomial::monomial({0, 0, 3, -2}), 0.0, 1.0);
  CHECK(eval_piecewise(pw, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  const auto mid = PiecewiseWpc::assemble(Polynomial::monomial({0, 0, 3, -2}), 0.2, 0.8);
  CHECK(eval_piecewise(mid, 0.1) == mid.p_cutin);
  CHECK(eval_piecewise(mid, 0.0) == mid.p_cutin);
  CHECK(eval_piecewise(mid, 0.8) == mid.p_rated);
  CHECK(eval_piecewise(mid, 0.95) == mid.p_rated);
  CHECK(std::abs(eval_piecewise(mid, 0.8 - 1e-9) - mid.p_rated) < 1e-8);
}

TEST_CASE("variance projection branches") {
  const std::vector<double> d{0.0, 0.5, 1.0};
  const auto phi = variance_projection(d);
  CHECK(phi[0] == 0.0);
  CHECK(phi[1] == doctest::Approx(0.5));
  CHECK(phi[2] == doctest::Approx(1.0));
}

TEST_CASE("normal points follow the curve") {
  const auto f = WpcFunction::de(20.0, -10.0);
  Rng rng(3);
  const ScatterSet s = synthesize_normal(f, 500, 0.0, rng);
  REQUIRE(s.size() == 500);
  for (const auto& p : s.points) {
    CHECK(p.y == eval_wpc_function(f, p.x));
    CHECK(p.label == PointLabel::Normal);
  }

  Rng rng2(4);
  const ScatterSet noisy = synthesize_normal(f, 10000, 0.05, rng2);
  std::vector<std::pair<double, double>> by_slope;
  for (const auto& p : noisy.points)
    by_slope.emplace_back(wpc_derivative(f, p.x), p.y - eval_wpc_function(f, p.x));
  std::sort(by_slope.begin(), by_slope.end());
  const auto sd = [](auto first, auto last) {
    double m = 0.0, n = 0.0;
    for (auto it = first; it != last; ++it) {
      m += it->second;
      n += 1.0;
    }
    m /= n;
    double v = 0.0;
    for (auto it = first; it != last; ++it) v += (it->second - m) * (it->second - m);
    return std::sqrt(v / (n - 1.0));
  };
  const std::size_t decile = by_slope.size() / 10;
  CHECK(sd(by_slope.end() - decile, by_slope.end()) > sd(by_slope.begin(), by_slope.begin() + decile));
}

TEST_CASE("stacked stripes sit under the curve") {
  const auto f = WpcFunction::de(20.0, -10.0);
  Rng rng(5);
  const ScatterSet flat = synthesize_stacked(f, 150, 0.0, rng);
  REQUIRE(flat.size() == 150);
  for (const auto& p : flat.points) {
    CHECK(p.y == flat.points.front().y);
    CHECK(p.label == PointLabel::Stacked);
  }
  for (int trial = 0; trial < 1000; ++trial) {
    Rng r(100 + trial);
    const ScatterSet s = synthesize_stacked(f, 20, 0.01, r);
    for (const auto& p : s.points) CHECK(eval_wpc_function(f, p.x) > p.y - 0.03);
  }
  Rng a(9), b(9);
  CHECK(synthesize_stacked(f, 50, 0.01, a) == synthesize_stacked(f, 50, 0.01, b));
}

TEST_CASE("sparse points are uniform") {
  Rng rng(6);
  const ScatterSet s = synthesize_sparse(100000, rng);
  double mx = 0.0, my = 0.0;
  for (const auto& p : s.points) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 1.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 1.0);
    mx += p.x;
    my += p.y;
  }
  CHECK(std::abs(mx / 1e5 - 0.5) < 0.01);
  CHECK(std::abs(my / 1e5 - 0.5) < 0.01);
  Rng one(1);
  CHECK(synthesize_sparse(1, one).size() == 1);
}

TEST_CASE("random discard") {
  Rng rng(8);
  const ScatterSet s = synthesize_sparse(500, rng);
  Rng r0(1);
  CHECK(random_discard(s, 0.0, 0.5, 0.95, r0).scatter == s);

  int speed_trials = 0;
  for (int t = 0; t < 200; ++t) {
    Rng r(t);
    const DiscardResult d = random_discard(s, 1.0, 0.5, 0.95, r);
    REQUIRE(d.truncated);
    for (const auto& p : d.scatter.points) CHECK((d.axis == DiscardAxis::Speed ? p.x : p.y) <= d.threshold);
    speed_trials += d.axis == DiscardAxis::Speed ? 1 : 0;
  }
  CHECK(speed_trials > 0);
  CHECK(speed_trials < 200);

  int truncated = 0;
  for (int t = 0; t < 1000; ++t) {
    Rng r(5000 + t);
    truncated += random_discard(s, 0.3, 0.5, 0.95, r).truncated ? 1 : 0;
  }
  CHECK(truncated >= 255);
  CHECK(truncated <= 345);
}

TEST_CASE("default samples carry 1400 labelled points") {
  SynthesisConfig cfg;
  cfg.n_samples = 100;
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = synthesize_dataset(cfg);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 10.0);
  REQUIRE(data.size() == 100);
  int whole = 0;
  for (const auto& s : data) {
    if (s.truncated) continue;
    ++whole;
    CHECK(s.scatter.size() == 1400);
    CHECK(s.scatter.count(PointLabel::Normal) == 1000);
    CHECK(s.scatter.count(PointLabel::Stacked) == 150);
    CHECK(s.scatter.count(PointLabel::Sparse) == 250);
  }
  CHECK(whole > 50);
  const auto again = synthesize_dataset(cfg);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(data[i].scatter == again[i].scatter);
    CHECK(data[i].truth == again[i].truth);
  }
  cfg.n_samples = 1;
  CHECK(synthesize_dataset(cfg).size() == 1);
}

TEST_CASE("zero-noise sample reproduces the truth") {
  SynthesisConfig cfg;
  cfg.sigma_normal = 0.0;
  cfg.discard_prob = 0.0;
  Rng rng(11);
  const SynthSample s = synthesize_sample(cfg, rng);
  for (const auto& p : s.scatter.points)
    if (p.label == PointLabel::Normal) CHECK(p.y == eval_wpc_function(s.truth, p.x));
}

TEST_CASE("synthesis config validation and JSON") {
  SynthesisConfig bad;
  bad.n_samples = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  SynthesisConfig c;
  c.sigma_normal = 0.02;
  c.stacked_mode = StackedMode::AroundCurve;
  c.seed = 42;
  nlohmann::json j = c;
  SynthesisConfig back;
  from_json(j, back);
  CHECK(back.sigma_normal == 0.02);
  CHECK(back.stacked_mode == StackedMode::AroundCurve);
  CHECK(back.seed == 42);
}

TEST_CASE("scatter CSV round trip") {
  Rng rng(12);
  const ScatterSet s = synthesize_sample(SynthesisConfig{}, rng).scatter;
  std::stringstream ss;
  write_scatter_csv(ss, s);
  const ScatterSet back = read_scatter_csv(ss);
  REQUIRE(back.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(back.points[i].x == s.points[i].x);
    CHECK(back.points[i].y == s.points[i].y);
    CHECK(back.points[i].label == s.points[i].label);
  }
}
