#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wpcm {

/// Axis-aligned search box.
struct Bounds {
  std::vector<double> lo, hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(const std::vector<double>& p) const;
  void validate() const;
};

struct SearchConfig {
  int population = 50;
  int iterations = 500;
  double mix_rate = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SearchResult {
  std::vector<double> best;
  double value = 0.0;
  /// Best-so-far objective after each generation.
  std::vector<double> trajectory;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Backtracking search: population-based, derivative-free, box constrained.
SearchResult bsa_minimize(const Objective& objective, const Bounds& bounds, const SearchConfig& cfg);

enum class ParametricFamily { DE, ADE, PLF4, PLF5 };

std::string_view to_string(ParametricFamily f);
ParametricFamily parametric_from_string(std::string_view s);

/// Closed form without clipping. PLF4 params (a, d, c, b); PLF5 adds g.
double eval_parametric(ParametricFamily f, const std::vector<double>& params, double x);
Bounds default_bounds(ParametricFamily f);

struct ParametricSpec {
  ParametricFamily family = ParametricFamily::DE;
  Bounds bounds;
  std::vector<double> params;
  double train_mse = 0.0;
};

ParametricSpec fit_parametric(const std::vector<double>& x, const std::vector<double>& y, ParametricFamily family,
                              const SearchConfig& cfg = {});

struct SnnConfig {
  int hidden_units = 50;
  int epochs = 2000;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One hidden tanh layer on the input 2x - 1, linear output.
struct SnnModel {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;
  std::vector<double> loss_history;

  double eval(double x) const;
};

SnnModel fit_snn(const std::vector<double>& x, const std::vector<double>& y, const SnnConfig& cfg = {});

struct SplineConfig {
  int knots = 20;           // equispaced on [0, 1], end points included
  double smoothing = 1e-8;  // weight of the integrated squared second derivative

  void validate() const;
};

/// Cubic B-spline on a clamped uniform knot vector over [0, 1].
struct SplineModel {
  int knots = 0;
  std::vector<double> coeffs;

  double eval(double x) const;
};

SplineModel fit_spline(const std::vector<double>& x, const std::vector<double>& y, const SplineConfig& cfg = {});

enum class BenchmarkKind { DE, ADE, PLF4, PLF5, SNN, Spline };

std::string_view to_string(BenchmarkKind k);
BenchmarkKind benchmark_from_string(std::string_view s);
const std::vector<BenchmarkKind>& all_benchmarks();

struct BenchmarkConfig {
  SearchConfig search;
  SnnConfig snn;
  SplineConfig spline;
};

/// A fitted benchmark, or monostate when nothing has been fitted.
using BenchmarkModel = std::variant<std::monostate, ParametricSpec, SnnModel, SplineModel>;

BenchmarkModel fit_benchmark(BenchmarkKind kind, const std::vector<double>& x, const std::vector<double>& y,
                             const BenchmarkConfig& cfg = {});

/// Prediction clipped to [0, 1]. Throws std::logic_error for an unfitted model.
double predict(const BenchmarkModel& model, double x);
std::vector<double> predict(const BenchmarkModel& model, const std::vector<double>& x);

std::string benchmark_name(const BenchmarkModel& model);

void to_json(nlohmann::json& j, const Bounds& b);
void from_json(const nlohmann::json& j, Bounds& b);
void to_json(nlohmann::json& j, const SearchConfig& c);
void from_json(const nlohmann::json& j, SearchConfig& c);
void to_json(nlohmann::json& j, const SnnConfig& c);
void from_json(const nlohmann::json& j, SnnConfig& c);
void to_json(nlohmann::json& j, const SplineConfig& c);
void from_json(const nlohmann::json& j, SplineConfig& c);
void to_json(nlohmann::json& j, const BenchmarkConfig& c);
void from_json(const nlohmann::json& j, BenchmarkConfig& c);
nlohmann::json model_to_json(const BenchmarkModel& m);
BenchmarkModel model_from_json(const nlohmann::json& j);

}  // namespace wpcm
