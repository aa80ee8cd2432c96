#pragma once

#include "wpcm/polynomial.hpp"
#include "wpcm/rng.hpp"

#include <nlohmann/json.hpp>

#include <string_view>
#include <vector>

namespace wpcm {

/// Ground-truth S-shape families.
///   DE:  f(x) = exp(-t1 * exp(t2 * x))
///   ADE: f(x) = exp(-exp(a0 - a1 x - a2 x^2 - a3 x^3))
enum class Family { DE, ADE };

std::string_view to_string(Family f);
Family family_from_string(std::string_view s);

/// Sampling ranges for synthetic ground-truth curves.
struct WpcSamplingRanges {
  double t1_lo = 10.0, t1_hi = 50.0;
  double t2_lo = -15.0, t2_hi = -8.0;
  double ade_a0 = 5.0, ade_a3 = 15.0;
  double a1_lo = -5.0, a1_hi = 25.0;
  double a2_lo = -15.0, a2_hi = 10.0;
  double de_probability = 0.5;
  int max_rejections = 1000;
};

/// A normalized wind power curve on [0, 1] -> [0, 1].
struct WpcFunction {
  Family family = Family::DE;
  std::vector<double> params;  // DE: {t1, t2}; ADE: {a0, a1, a2, a3}

  static WpcFunction de(double t1, double t2) { return {Family::DE, {t1, t2}}; }
  static WpcFunction ade(double a0, double a1, double a2, double a3) {
    return {Family::ADE, {a0, a1, a2, a3}};
  }

  bool operator==(const WpcFunction&) const = default;
};

double eval_wpc_function(const WpcFunction& f, double x);
double wpc_derivative(const WpcFunction& f, double x);

/// Closed forms without the [0, 1] domain check (used by fitting code).
double eval_family_unchecked(Family family, const std::vector<double>& params, double x);

/// Monotone on a 512-point grid, f(0) <= 0.05, f(1) >= 0.95.
bool passes_shape_check(const WpcFunction& f);

/// Draws a family uniformly, then parameters from the sampling ranges,
/// rejecting draws that fail the shape check.
WpcFunction sample_wpc_function(Rng& rng, const WpcSamplingRanges& ranges = {});

/// Extracted curve: polynomial on [x_cutin, x_rated), flat plateaus outside.
struct PiecewiseWpc {
  Polynomial poly;
  double x_cutin = 0.0;
  double x_rated = 1.0;
  double p_cutin = 0.0;
  double p_rated = 1.0;
  bool cutin_converged = false;  // Newton iteration found f_p'(x_cutin) = 0
  bool rated_converged = false;

  /// Builds the plateaus from the polynomial values at the two speeds.
  static PiecewiseWpc assemble(Polynomial poly, double x_cutin, double x_rated,
                               bool cutin_converged = false, bool rated_converged = false);
};

/// Plateau below x_cutin, polynomial (clamped to [0, 1]) in between,
/// plateau from x_rated on.
double eval_piecewise(const PiecewiseWpc& f, double x);

void to_json(nlohmann::json& j, const WpcFunction& f);
void from_json(const nlohmann::json& j, WpcFunction& f);
void to_json(nlohmann::json& j, const PiecewiseWpc& f);
void from_json(const nlohmann::json& j, PiecewiseWpc& f);

}  // namespace wpcm
