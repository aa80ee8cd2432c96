#include "doctest.h"

#include "wpcm/errors.hpp"
#include "wpcm/metrics.hpp"
#include "wpcm/rng.hpp"

#include <cmath>
#include <sstream>

using namespace wpcm;

TEST_CASE("hand-computed two-point vector") {
  const MetricReport r = evaluate({0.6, 0.8}, {0.5, 1.0}, {0.5, 0.9}, 0.1);
  CHECK(r.rmse == doctest::Approx(std::sqrt(0.025)).epsilon(1e-12));
  CHECK(std::abs(r.rmse - 0.158114) <= 1e-6);
  CHECK(std::abs(r.mae - 0.15) <= 1e-12);
  REQUIRE(r.mape_pct.has_value());
  CHECK(std::abs(*r.mape_pct - 20.0) <= 1e-9);
  CHECK(std::abs(r.wmape_pct - 20.0) <= 1e-9);
  CHECK(r.alpha_ss_pct.at(0.15) == 50.0);
  CHECK(r.alpha_ss_pct.at(0.05) == 0.0);
  CHECK(r.n_points == 2);
  CHECK(r.n_points_mape == 2);
}

TEST_CASE("perfect predictions") {
  const std::vector<double> t{0.1, 0.4, 0.9};
  const MetricReport r = evaluate(t, t, {0.3, 0.5, 0.8}, 0.2);
  CHECK(r.rmse == 0.0);
  CHECK(r.mae == 0.0);
  CHECK(*r.mape_pct == 0.0);
  CHECK(r.wmape_pct == 0.0);
  for (const auto& [a, v] : r.alpha_ss_pct) CHECK(v == 100.0);
}

TEST_CASE("MAPE cut-in filter and zero truths") {
  // Only the last point lies above cut-in.
  const MetricReport r = evaluate({0.1, 0.2, 0.55}, {0.0, 0.1, 0.5}, {0.05, 0.1, 0.6}, 0.12);
  CHECK(r.n_points_mape == 1);
  CHECK(*r.mape_pct == doctest::Approx(10.0));

  const MetricReport none = evaluate({0.1, 0.2}, {0.0, 0.3}, {0.05, 0.1}, 0.12);
  CHECK_FALSE(none.mape_pct.has_value());
  CHECK(none.n_points_mape == 0);

  const MetricReport zero = evaluate({0.1, 0.6}, {0.0, 0.5}, {0.5, 0.6}, 0.12);
  CHECK(zero.n_mape_zero_truth == 1);
  CHECK(zero.n_points_mape == 1);
  CHECK(std::isfinite(*zero.mape_pct));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(evaluate({}, {}, {}, 0.1), DomainError);
  CHECK_THROWS_AS(evaluate({0.1}, {0.1, 0.2}, {0.5}, 0.1), DomainError);
}

TEST_CASE("property suite on random vectors") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(uniform(rng, 0.0, 50.0));
    std::vector<double> p(n), t(n), s(n);
    for (int i = 0; i < n; ++i) {
      t[i] = uniform(rng, 0.01, 1.0);
      p[i] = std::clamp(t[i] + 0.2 * standard_normal(rng), 0.0, 1.0);
      s[i] = uniform(rng, 0.0, 1.0);
    }
    const MetricReport r = evaluate(p, t, s, 0.1, {0.01, 0.05, 0.1, 0.15, 0.3});
    CHECK(r.mae <= r.rmse + 1e-15);
    double prev = -1.0;
    for (const auto& [a, v] : r.alpha_ss_pct) {
      CHECK(v >= prev);
      CHECK(v <= 100.0);
      prev = v;
    }
    CHECK(r.n_points_mape <= r.n_points);

    const double k = uniform(rng, 0.1, 10.0);
    std::vector<double> pk(p), tk(t);
    for (int i = 0; i < n; ++i) {
      pk[i] *= k;
      tk[i] *= k;
    }
    const MetricReport rk = evaluate(pk, tk, s, 0.1);
    CHECK(rk.wmape_pct == doctest::Approx(r.wmape_pct).epsilon(1e-9));
    CHECK(rk.rmse == doctest::Approx(k * r.rmse).epsilon(1e-9));
    CHECK(rk.mae == doctest::Approx(k * r.mae).epsilon(1e-9));

    std::vector<double> p2(p), t2(t), s2(s);
    const double v = uniform(rng, 0.0, 1.0);
    p2.push_back(v);
    t2.push_back(v);
    s2.push_back(uniform(rng, 0.0, 1.0));
    const MetricReport r2 = evaluate(p2, t2, s2, 0.1, {0.01, 0.05, 0.1, 0.15, 0.3});
    CHECK(r2.rmse <= r.rmse + 1e-15);
    CHECK(r2.mae <= r.mae + 1e-15);
    CHECK(r2.wmape_pct <= r.wmape_pct + 1e-12);
    for (const auto& [a, val] : r.alpha_ss_pct) CHECK(r2.alpha_ss_pct.at(a) >= val);
  }
}

TEST_CASE("csv layout") {
  std::ostringstream os;
  MetricRow row{"de", "S1", "NP", evaluate({0.6, 0.8}, {0.5, 1.0}, {0.5, 0.9}, 0.1)};
  MetricRow empty{"snn", "S2", "IDP", evaluate({0.1}, {0.2}, {0.0}, 0.1)};
  write_metric_csv(os, {row, empty});
  std::istringstream is(os.str());
  std::string header, l1, l2;
  std::getline(is, header);
  std::getline(is, l1);
  std::getline(is, l2);
  CHECK(header == "model,scenario,pattern,rmse,mae,mape_pct,wmape_pct,ss_0.05_pct,ss_0.1_pct,ss_0.15_pct,n_points,n_points_mape");
  CHECK(l1.rfind("de,S1,NP,0.158113883", 0) == 0);
  CHECK(l2.find(",NA,") != std::string::npos);
}
