#pragma once

#include "wpcm/curve_models.hpp"
#include "wpcm/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wpcm {

enum class PointLabel { Normal, Stacked, Sparse, Unknown };

std::string_view to_string(PointLabel l);
PointLabel label_from_string(std::string_view s);

struct ScatterPoint {
  double x = 0.0;  // normalized wind speed
  double y = 0.0;  // normalized power
  PointLabel label = PointLabel::Unknown;

  bool operator==(const ScatterPoint&) const = default;
};

struct ScatterSet {
  std::vector<ScatterPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  std::size_t count(PointLabel label) const;
  void append(const ScatterSet& other);

  bool operator==(const ScatterSet&) const = default;
};

enum class StackedMode { Stripe, AroundCurve };

struct SynthesisConfig {
  int n_samples = 4000;
  int n_normal = 1000;
  int n_stacked = 150;
  int n_sparse = 250;
  double sigma_normal = 0.05;
  double sigma_stacked = 0.01;
  StackedMode stacked_mode = StackedMode::Stripe;
  double discard_prob = 0.3;
  double discard_lo = 0.5;  // discard threshold drawn from U[discard_lo, discard_hi]
  double discard_hi = 0.95;
  std::uint64_t seed = 0;
  WpcSamplingRanges ranges;

  void validate() const;
};

/// Min-max normalize, then soften the top of the range:
/// phi = eta for eta < 0.7, sqrt(1 - (eta - 1)^4) otherwise.
std::vector<double> variance_projection(std::span<const double> derivatives);

ScatterSet synthesize_normal(const WpcFunction& f, int count, double sigma_normal, Rng& rng);

/// Curtailment stripe (default) or jitter around the curve.
ScatterSet synthesize_stacked(const WpcFunction& f, int count, double sigma_stacked, Rng& rng,
                              StackedMode mode = StackedMode::Stripe);

ScatterSet synthesize_sparse(int count, Rng& rng);

enum class DiscardAxis { Speed, Power };

struct DiscardResult {
  ScatterSet scatter;
  bool truncated = false;
  DiscardAxis axis = DiscardAxis::Speed;
  double threshold = 1.0;
};

DiscardResult random_discard(const ScatterSet& s, double discard_prob, double lo, double hi,
                             Rng& rng);

struct SynthSample {
  ScatterSet scatter;
  WpcFunction truth;
  std::uint64_t seed = 0;
  bool truncated = false;
};

SynthSample synthesize_sample(const SynthesisConfig& cfg, Rng& rng);

/// Sample i is drawn from its own stream seeded with derive_seed(cfg.seed, i).
std::vector<SynthSample> synthesize_dataset(const SynthesisConfig& cfg);

void write_scatter_csv(std::ostream& out, const ScatterSet& s);
void write_scatter_csv(const std::string& path, const ScatterSet& s);
ScatterSet read_scatter_csv(std::istream& in);
ScatterSet read_scatter_csv(const std::string& path);

void to_json(nlohmann::json& j, const SynthesisConfig& c);
void from_json(const nlohmann::json& j, SynthesisConfig& c);

}  // namespace wpcm
