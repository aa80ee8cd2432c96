#include "wpcm/curve_models.hpp"

#include "wpcm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wpcm {

namespace {

void check_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0))
    throw DomainError(std::string(what) + ": x = " + std::to_string(x) + " outside [0, 1]");
}

void check_params(const WpcFunction& f) {
  const std::size_t want = f.family == Family::DE ? 2 : 4;
  if (f.params.size() != want)
    throw ConfigError(std::string(to_string(f.family)) + " expects " + std::to_string(want) +
                      " parameters, got " + std::to_string(f.params.size()));
}

}  // namespace

std::string_view to_string(Family f) { return f == Family::DE ? "DE" : "ADE"; }

Family family_from_string(std::string_view s) {
  if (s == "DE") return Family::DE;
  if (s == "ADE") return Family::ADE;
  throw ConfigError("unknown WPC family '" + std::string(s) + "'");
}

double eval_family_unchecked(Family family, const std::vector<double>& p, double x) {
  if (family == Family::DE) return std::exp(-p[0] * std::exp(p[1] * x));
  const double inner = p[0] - p[1] * x - p[2] * x * x - p[3] * x * x * x;
  return std::exp(-std::exp(inner));
}

double eval_wpc_function(const WpcFunction& f, double x) {
  check_unit(x, "eval_wpc_function");
  check_params(f);
  return eval_family_unchecked(f.family, f.params, x);
}

double wpc_derivative(const WpcFunction& f, double x) {
  check_unit(x, "wpc_derivative");
  check_params(f);
  const auto& p = f.params;
  if (f.family == Family::DE) {
    const double e = std::exp(p[1] * x);
    return -p[0] * p[1] * e * std::exp(-p[0] * e);
  }
  const double inner = p[0] - p[1] * x - p[2] * x * x - p[3] * x * x * x;
  const double slope = p[1] + 2.0 * p[2] * x + 3.0 * p[3] * x * x;
  const double e = std::exp(inner);
  return std::exp(-e) * e * slope;
}

bool passes_shape_check(const WpcFunction& f) {
  constexpr int kGrid = 512;
  double prev = eval_wpc_function(f, 0.0);
  if (!(prev <= 0.05)) return false;
  for (int i = 1; i < kGrid; ++i) {
    const double v = eval_wpc_function(f, static_cast<double>(i) / (kGrid - 1));
    if (!(v >= prev)) return false;
    prev = v;
  }
  return prev >= 0.95;
}

WpcFunction sample_wpc_function(Rng& rng, const WpcSamplingRanges& r) {
  const bool de = uniform(rng, 0.0, 1.0) < r.de_probability;
  for (int attempt = 0; attempt < r.max_rejections; ++attempt) {
    WpcFunction f;
    if (de) {
      const double t1 = uniform(rng, r.t1_lo, r.t1_hi);
      const double t2 = uniform(rng, r.t2_lo, r.t2_hi);
      f = WpcFunction::de(t1, t2);
    } else {
      const double a2 = uniform(rng, r.a2_lo, r.a2_hi);
      const double a1 = uniform(rng, r.a1_lo, r.a1_hi);
      f = WpcFunction::ade(r.ade_a0, a1, a2, r.ade_a3);
    }
    if (passes_shape_check(f)) return f;
  }
  throw SamplingFailure("sample_wpc_function: no valid " + std::string(de ? "DE" : "ADE") +
                        " curve after " + std::to_string(r.max_rejections) +
                        " draws; check the sampling ranges");
}

PiecewiseWpc PiecewiseWpc::assemble(Polynomial poly, double x_cutin, double x_rated,
                                    bool cutin_converged, bool rated_converged) {
  PiecewiseWpc out;
  out.poly = std::move(poly);
  out.x_cutin = std::clamp(x_cutin, 0.0, 1.0);
  out.x_rated = std::clamp(x_rated, 0.0, 1.0);
  out.p_cutin = std::clamp(out.poly(out.x_cutin), 0.0, 1.0);
  out.p_rated = std::clamp(out.poly(out.x_rated), 0.0, 1.0);
  out.cutin_converged = cutin_converged;
  out.rated_converged = rated_converged;
  return out;
}

double eval_piecewise(const PiecewiseWpc& f, double x) {
  check_unit(x, "eval_piecewise");
  if (x < f.x_cutin) return f.p_cutin;
  if (x >= f.x_rated) return f.p_rated;
  return std::clamp(f.poly(x), 0.0, 1.0);
}

void to_json(nlohmann::json& j, const WpcFunction& f) {
  j = {{"family", std::string(to_string(f.family))}, {"params", f.params}};
}

void from_json(const nlohmann::json& j, WpcFunction& f) {
  f.family = family_from_string(j.at("family").get<std::string>());
  f.params = j.at("params").get<std::vector<double>>();
  check_params(f);
}

void to_json(nlohmann::json& j, const PiecewiseWpc& f) {
  j = {{"basis", std::string(to_string(f.poly.basis()))},
       {"coeffs", f.poly.coeffs()},
       {"x_cutin", f.x_cutin},
       {"x_rated", f.x_rated},
       {"p_cutin", f.p_cutin},
       {"p_rated", f.p_rated},
       {"cutin_converged", f.cutin_converged},
       {"rated_converged", f.rated_converged}};
}

void from_json(const nlohmann::json& j, PiecewiseWpc& f) {
  const Basis basis = basis_from_string(j.value("basis", std::string("monomial")));
  f.poly = Polynomial(basis, j.at("coeffs").get<std::vector<double>>());
  f.x_cutin = j.at("x_cutin").get<double>();
  f.x_rated = j.at("x_rated").get<double>();
  f.p_cutin = j.at("p_cutin").get<double>();
  f.p_rated = j.at("p_rated").get<double>();
  f.cutin_converged = j.value("cutin_converged", false);
  f.rated_converged = j.value("rated_converged", false);
  if (!(0.0 <= f.x_cutin && f.x_cutin < f.x_rated && f.x_rated <= 1.0))
    throw CorruptFile("PiecewiseWpc record violates 0 <= x_cutin < x_rated <= 1");
}

}  // namespace wpcm
