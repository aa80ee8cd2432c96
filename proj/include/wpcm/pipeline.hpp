#pragma once

#include "wpcm/benchmarks.hpp"
#include "wpcm/curve_models.hpp"
#include "wpcm/extraction.hpp"
#include "wpcm/metrics.hpp"
#include "wpcm/neural_generator.hpp"
#include "wpcm/raster.hpp"
#include "wpcm/synthesis.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wpcm {

// ------------------------------------------------------------------ ingestion

/// Physical normalization constants. Unset values are estimated from the data:
/// cut-out speed as 1.05 x the largest speed, rated power as the 0.99 quantile of power.
struct NormalizationSpec {
  std::optional<double> cutout_speed;
  std::optional<double> rated_power;

  void validate() const;
};

struct IngestResult {
  ScatterSet data;  // labels are Unknown
  std::size_t rejected = 0;
  double cutout_speed = 0.0;
  double rated_power = 0.0;
};

/// Reads a CSV with `wind_speed` and `wind_power` header columns (any order, extra columns ignored).
IngestResult ingest_scada(std::istream& in, const NormalizationSpec& spec = {});
IngestResult ingest_scada(const std::string& path, const NormalizationSpec& spec = {});

// ------------------------------------------------------------------ scenarios

enum class Scenario { S1Raw, S2Rough, S3Careful };
enum class Pattern { NP, IDP };

std::string_view to_string(Scenario s);
std::string_view to_string(Pattern p);
Scenario scenario_from_string(std::string_view s);
Pattern pattern_from_string(std::string_view s);

/// Thresholds of the rule-based rough cleaning.
struct RoughFilterConfig {
  double low_power = 0.02;              // "stopped" power level
  double rated_speed_fraction = 0.5;    // stopped points beyond this fraction of the rated-speed proxy go
  double plateau_power = 0.95;          // points at or above this power form the rated plateau
  double bin_width = 0.01;              // horizontal power bins
  double overrepresented_factor = 3.0;  // bins above factor x median count are dropped

  void validate() const;
};

struct ScenarioSpec {
  Scenario scenario = Scenario::S1Raw;
  Pattern pattern = Pattern::NP;
  double idp_quantile = 0.6;
  RoughFilterConfig rough;

  void validate() const;
};

/// Rule-based cleaning used by the rough scenario.
ScatterSet rough_filter(const ScatterSet& data, const RoughFilterConfig& cfg);

/// Drops every point whose speed exceeds the `q` quantile of the speeds in `data`.
ScatterSet truncate_speed_quantile(const ScatterSet& data, double q);

/// Scenario cleaning followed by IDP truncation. The careful scenario keeps the
/// `Normal`-labelled points of a fully labelled set, or returns `cleaned` when supplied.
ScatterSet apply_scenario(const ScatterSet& data, const ScenarioSpec& spec,
                          const ScatterSet* cleaned = nullptr);

/// Scenario cleaning only; the test split is filtered this way before scoring.
ScatterSet apply_cleaning(const ScatterSet& data, const ScenarioSpec& spec,
                          const ScatterSet* cleaned = nullptr);

// ------------------------------------------------------------------ run configuration

struct RunPaths {
  std::string input_csv;
  std::string cleaned_csv;
  std::string checkpoint;
  std::string output_dir = "wpcm_out";
};

struct RunConfig {
  RunPaths paths;
  NormalizationSpec normalization;
  SynthesisConfig synthesis;
  RasterConfig raster;
  NetworkConfig network;
  TrainConfig train;
  ExtractionConfig extraction;
  BenchmarkConfig benchmarks;
  std::vector<BenchmarkKind> enabled_benchmarks = all_benchmarks();
  ScenarioSpec scenario;
  double test_split_fraction = 0.2;
  double mape_cut_in = 0.12;  // normalized speed below which MAPE ignores points
  int runtime_repetitions = 5;
  std::uint64_t seed = 0;
  std::uint64_t network_seed = 0;
  std::uint64_t split_seed = 0;

  /// 64x64 frame, base 16, 500 samples, order-20 extraction.
  static RunConfig desk_profile();

  /// Sets `seed` and derives every component seed from it.
  void reseed(std::uint64_t master);
  void validate() const;
};

void to_json(nlohmann::json& j, const NormalizationSpec& s);
void from_json(const nlohmann::json& j, NormalizationSpec& s);
void to_json(nlohmann::json& j, const ScenarioSpec& s);
void from_json(const nlohmann::json& j, ScenarioSpec& s);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Missing keys keep their defaults.
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

// ------------------------------------------------------------------ training

struct TrainingArtifacts {
  std::string checkpoint;
  std::string loss_csv;
  std::string manifest;
  TrainResult result;
};

/// Order-sensitive FNV-1a digest of a synthetic dataset (points, labels and truths).
std::string dataset_digest(const std::vector<SynthSample>& samples);

/// Synthesizes, rasterizes, trains and persists. The manifest is written with
/// `"complete": false` first and rewritten with `true` once the checkpoint is in place.
TrainingArtifacts run_dit_training(const RunConfig& cfg, const EpochCallback& on_epoch = {});

// ------------------------------------------------------------------ modelling

struct WpcmResult {
  PiecewiseWpc curve;
  WpcImage input;
  WpcImage generated;
  double marker_size = 0.0;
};

/// Renders the scatter at the test-time marker size, runs the generator and extracts the curve.
/// Fewer than 10 points raise DomainError. When extraction fails and `failure_dir` is set,
/// the generated image is saved there as generated_failed.png before the error propagates.
WpcmResult wpcm_curve(const ScatterSet& data, const Model& model, const RasterConfig& raster,
                      const ExtractionConfig& extraction, const std::string& failure_dir = {});

struct WpcmArtifacts {
  WpcmResult result;
  std::string curve_json;
  std::string input_png;
  std::string generated_png;
  std::string overlay_png;
};

/// wpcm_curve plus the curve record, both images and a 256x256 overlay written to `out_dir`.
WpcmArtifacts run_wpcm(const ScatterSet& data, const Model& model, const RunConfig& cfg,
                       const std::string& out_dir);

/// RMSE between two curves on `n` evenly spaced speeds of [lo, hi].
double grid_rmse(const std::function<double(double)>& a, const std::function<double(double)>& b,
                 double lo = 0.0, double hi = 1.0, int n = 1001);

// ------------------------------------------------------------------ benchmarking

struct NamedModel {
  std::string name;
  const Model* model = nullptr;
};

struct Split {
  ScatterSet train;
  ScatterSet test;
};

/// Seeded shuffle; the first round(fraction * n) points form the test split.
Split split_data(const ScatterSet& data, double test_fraction, std::uint64_t seed);

/// Holds out the test split, models the training portion under `spec` and scores
/// every model on the scenario-cleaned test split. A model that throws yields a failed row.
std::vector<MetricRow> run_benchmark_suite(const ScatterSet& data, const RunConfig& cfg,
                                           const ScenarioSpec& spec,
                                           const std::vector<NamedModel>& networks,
                                           const ScatterSet* cleaned = nullptr);

// ------------------------------------------------------------------ synthetic recovery

/// Held-out synthetic cases scored against their known ground truth.
struct RecoveryConfig {
  int n_cases = 50;
  std::uint64_t seed = 777;  // held-out stream, disjoint from the training stream
  ScenarioSpec scenario;
  std::vector<BenchmarkKind> benchmarks{BenchmarkKind::DE};
  double grid_lo = 0.0;
  double grid_hi = 1.0;
};

struct RecoveryCase {
  int index = 0;
  std::string model;
  double rmse = 0.0;
  std::string error;
  std::optional<PiecewiseWpc> extracted;  // network rows only
};

struct RecoverySummary {
  std::vector<RecoveryCase> cases;
  std::map<std::string, double> mean_rmse;  // over successful cases
  std::map<std::string, int> failures;
};

/// Synthesizes `n_cases` scatters without random discard (from `cfg.synthesis` with the
/// recovery seed), applies the scenario, then fits the network pipeline (when `model` is set)
/// and each benchmark, scoring grid RMSE against the generating curve.
RecoverySummary evaluate_recovery(const Model* model, const RunConfig& cfg, const RecoveryConfig& rc,
                                  const std::string& network_name = "DITU-net");

void write_recovery_csv(const std::string& path, const RecoverySummary& summary);

// ------------------------------------------------------------------ runtime

struct RuntimeSubject {
  std::string name;
  std::function<void()> run;
};

struct RuntimeRow {
  std::string name;
  double mean_seconds = 0.0;
  double min_seconds = 0.0;
  double max_seconds = 0.0;
  int repetitions = 0;
};

struct RuntimeReport {
  std::vector<RuntimeRow> rows;
  std::string hardware;
};

/// CPU model and thread count of the host.
std::string hardware_description();

/// One untimed warm-up call per subject, then `repetitions` timed calls (at least 5).
RuntimeReport measure_runtime(const std::vector<RuntimeSubject>& subjects, int repetitions = 5);

void write_runtime_csv(const std::string& path, const RuntimeReport& report);

}  // namespace wpcm
