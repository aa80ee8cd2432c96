#include "wpcm/pipeline.hpp"

#include "wpcm/errors.hpp"
#include "wpcm/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

namespace wpcm {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const auto keep = [](unsigned char c) { return !std::isspace(c) && c != '"' && c != '\''; };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), keep));
  s.erase(std::find_if(s.rbegin(), s.rend(), keep).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

/// Linear-interpolation quantile of unsorted values.
double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw DomainError("quantile of an empty set");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> xs_of(const ScatterSet& s) {
  std::vector<double> v;
  v.reserve(s.size());
  for (const auto& p : s.points) v.push_back(p.x);
  return v;
}

std::vector<double> ys_of(const ScatterSet& s) {
  std::vector<double> v;
  v.reserve(s.size());
  for (const auto& p : s.points) v.push_back(p.y);
  return v;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  atomic_write(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

}  // namespace

// ------------------------------------------------------------------ ingestion

void NormalizationSpec::validate() const {
  if (cutout_speed && !(*cutout_speed > 0.0 && std::isfinite(*cutout_speed)))
    throw ConfigError("cutout_speed must be positive");
  if (rated_power && !(*rated_power > 0.0 && std::isfinite(*rated_power)))
    throw ConfigError("rated_power must be positive");
}

IngestResult ingest_scada(std::istream& in, const NormalizationSpec& spec) {
  spec.validate();
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw ConfigError("SCADA CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  const auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("SCADA CSV lacks a '" + name + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_speed = column("wind_speed");
  const std::size_t c_power = column("wind_power");

  IngestResult res;
  std::vector<double> speed, power;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    double s = 0.0, p = 0.0;
    if (cells.size() <= std::max(c_speed, c_power) || !parse_double(cells[c_speed], s) ||
        !parse_double(cells[c_power], p) || !std::isfinite(s) || !std::isfinite(p)) {
      ++res.rejected;
      continue;
    }
    speed.push_back(s);
    power.push_back(p);
  }
  if (speed.empty()) throw ConfigError("SCADA CSV has no finite data rows");

  res.cutout_speed = spec.cutout_speed.value_or(1.05 * *std::max_element(speed.begin(), speed.end()));
  res.rated_power = spec.rated_power ? *spec.rated_power : quantile(power, 0.99);
  if (!(res.cutout_speed > 0.0)) throw ConfigError("estimated cut-out speed is not positive");
  if (!(res.rated_power > 0.0)) throw ConfigError("estimated rated power is not positive");

  res.data.points.reserve(speed.size());
  for (std::size_t i = 0; i < speed.size(); ++i) {
    const double x = std::clamp(speed[i] / res.cutout_speed, 0.0, 1.0);
    const double y = std::clamp(power[i] / res.rated_power, 0.0, 1.0);
    res.data.points.push_back({x, y, PointLabel::Unknown});
  }
  return res;
}

IngestResult ingest_scada(const std::string& path, const NormalizationSpec& spec) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open SCADA CSV '" + path + "'");
  return ingest_scada(in, spec);
}

// ------------------------------------------------------------------ scenarios

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::S1Raw: return "S1_raw";
    case Scenario::S2Rough: return "S2_rough";
    case Scenario::S3Careful: return "S3_careful";
  }
  return "S1_raw";
}

std::string_view to_string(Pattern p) { return p == Pattern::NP ? "NP" : "IDP"; }

Scenario scenario_from_string(std::string_view s) {
  if (s == "S1_raw" || s == "S1" || s == "raw") return Scenario::S1Raw;
  if (s == "S2_rough" || s == "S2" || s == "rough") return Scenario::S2Rough;
  if (s == "S3_careful" || s == "S3" || s == "careful") return Scenario::S3Careful;
  throw ConfigError("unknown scenario '" + std::string(s) + "'");
}

Pattern pattern_from_string(std::string_view s) {
  if (s == "NP" || s == "np") return Pattern::NP;
  if (s == "IDP" || s == "idp") return Pattern::IDP;
  throw ConfigError("unknown pattern '" + std::string(s) + "'");
}

void RoughFilterConfig::validate() const {
  if (!(low_power >= 0.0 && low_power < plateau_power && plateau_power <= 1.0))
    throw ConfigError("rough filter: need 0 <= low_power < plateau_power <= 1");
  if (!(rated_speed_fraction > 0.0 && rated_speed_fraction <= 1.0))
    throw ConfigError("rough filter: rated_speed_fraction must lie in (0, 1]");
  if (!(bin_width > 0.0 && bin_width <= 0.5)) throw ConfigError("rough filter: bin_width must lie in (0, 0.5]");
  if (!(overrepresented_factor > 1.0)) throw ConfigError("rough filter: overrepresented_factor must exceed 1");
}

void ScenarioSpec::validate() const {
  rough.validate();
  if (!(idp_quantile > 0.0 && idp_quantile <= 1.0)) throw ConfigError("idp_quantile must lie in (0, 1]");
}

ScatterSet rough_filter(const ScatterSet& data, const RoughFilterConfig& cfg) {
  cfg.validate();
  std::vector<double> plateau_x;
  for (const auto& p : data.points)
    if (p.y >= cfg.plateau_power) plateau_x.push_back(p.x);
  const double rated_proxy = plateau_x.empty() ? 1.0 : quantile(plateau_x, 0.05);
  const double stop_speed = cfg.rated_speed_fraction * rated_proxy;

  ScatterSet kept;
  for (const auto& p : data.points)
    if (!(p.y < cfg.low_power && p.x > stop_speed)) kept.points.push_back(p);

  const auto in_band = [&](double y) { return y >= cfg.low_power && y < cfg.plateau_power; };
  const auto bin_of = [&](double y) { return static_cast<long>(std::floor(y / cfg.bin_width)); };
  std::map<long, std::size_t> counts;
  for (const auto& p : kept.points)
    if (in_band(p.y)) ++counts[bin_of(p.y)];
  if (counts.empty()) return kept;
  std::vector<double> c;
  for (const auto& [bin, n] : counts) c.push_back(static_cast<double>(n));
  const double limit = cfg.overrepresented_factor * quantile(c, 0.5);

  ScatterSet out;
  for (const auto& p : kept.points)
    if (!in_band(p.y) || static_cast<double>(counts[bin_of(p.y)]) <= limit) out.points.push_back(p);
  return out;
}

ScatterSet truncate_speed_quantile(const ScatterSet& data, double q) {
  if (data.empty()) return data;
  const double limit = quantile(xs_of(data), q);
  ScatterSet out;
  for (const auto& p : data.points)
    if (p.x <= limit) out.points.push_back(p);
  return out;
}

ScatterSet apply_cleaning(const ScatterSet& data, const ScenarioSpec& spec, const ScatterSet* cleaned) {
  spec.validate();
  switch (spec.scenario) {
    case Scenario::S1Raw: return data;
    case Scenario::S2Rough: return rough_filter(data, spec.rough);
    case Scenario::S3Careful: {
      if (cleaned) return *cleaned;
      const bool labelled = !data.empty() && std::none_of(data.points.begin(), data.points.end(), [](const auto& p) {
        return p.label == PointLabel::Unknown;
      });
      if (!labelled)
        throw ConfigError("the careful scenario needs outlier labels or a pre-cleaned input file");
      ScatterSet out;
      for (const auto& p : data.points)
        if (p.label == PointLabel::Normal) out.points.push_back(p);
      return out;
    }
  }
  return data;
}

ScatterSet apply_scenario(const ScatterSet& data, const ScenarioSpec& spec, const ScatterSet* cleaned) {
  ScatterSet out = apply_cleaning(data, spec, cleaned);
  if (spec.pattern == Pattern::IDP && !data.empty()) {
    const double limit = quantile(xs_of(data), spec.idp_quantile);
    std::erase_if(out.points, [&](const ScatterPoint& p) { return p.x > limit; });
  }
  return out;
}

// ------------------------------------------------------------------ run configuration

RunConfig RunConfig::desk_profile() {
  RunConfig c;
  c.raster = RasterConfig::scaled(0.25);
  c.network.base_channels = 16;
  c.synthesis.n_samples = 500;
  c.synthesis.seed = 1;
  c.network_seed = 1;
  c.train.n_iter = 150;
  c.extraction.poly_order = 20;
  c.paths.output_dir = "wpcm_desk";
  return c;
}

void RunConfig::reseed(std::uint64_t master) {
  seed = master;
  synthesis.seed = derive_seed(master, 1);
  network_seed = derive_seed(master, 2);
  train.seed = derive_seed(master, 3);
  benchmarks.search.seed = derive_seed(master, 4);
  benchmarks.snn.seed = derive_seed(master, 5);
  split_seed = derive_seed(master, 6);
}

void RunConfig::validate() const {
  normalization.validate();
  synthesis.validate();
  raster.validate();
  network.validate();
  train.validate();
  extraction.validate();
  scenario.validate();
  if (!(test_split_fraction > 0.0 && test_split_fraction < 1.0))
    throw ConfigError("test_split_fraction must lie in (0, 1)");
  if (!(mape_cut_in >= 0.0 && mape_cut_in < 1.0)) throw ConfigError("mape_cut_in must lie in [0, 1)");
  if (runtime_repetitions < 5) throw ConfigError("runtime_repetitions must be at least 5");
  const int m = network.size_multiple();
  if (raster.width % m != 0 || raster.height % m != 0)
    throw ConfigError("raster size must be divisible by " + std::to_string(m) + " for this network depth");
}

void to_json(nlohmann::json& j, const NormalizationSpec& s) {
  j = nlohmann::json{{"cutout_speed", s.cutout_speed ? nlohmann::json(*s.cutout_speed) : nlohmann::json("auto")},
                     {"rated_power", s.rated_power ? nlohmann::json(*s.rated_power) : nlohmann::json("auto")}};
}

void from_json(const nlohmann::json& j, NormalizationSpec& s) {
  const auto read = [&](const char* key, std::optional<double>& v) {
    if (!j.contains(key)) return;
    const auto& e = j.at(key);
    if (e.is_number()) v = e.get<double>();
    else if (e.is_null() || (e.is_string() && e.get<std::string>() == "auto")) v.reset();
    else throw ConfigError(std::string("normalization.") + key + " must be a number or \"auto\"");
  };
  read("cutout_speed", s.cutout_speed);
  read("rated_power", s.rated_power);
}

void to_json(nlohmann::json& j, const ScenarioSpec& s) {
  j = nlohmann::json{{"scenario", to_string(s.scenario)},
                     {"pattern", to_string(s.pattern)},
                     {"idp_quantile", s.idp_quantile},
                     {"rough_filter",
                      {{"low_power", s.rough.low_power},
                       {"rated_speed_fraction", s.rough.rated_speed_fraction},
                       {"plateau_power", s.rough.plateau_power},
                       {"bin_width", s.rough.bin_width},
                       {"overrepresented_factor", s.rough.overrepresented_factor}}}};
}

void from_json(const nlohmann::json& j, ScenarioSpec& s) {
  if (j.contains("scenario")) s.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  if (j.contains("pattern")) s.pattern = pattern_from_string(j.at("pattern").get<std::string>());
  s.idp_quantile = j.value("idp_quantile", s.idp_quantile);
  if (j.contains("rough_filter")) {
    const auto& r = j.at("rough_filter");
    s.rough.low_power = r.value("low_power", s.rough.low_power);
    s.rough.rated_speed_fraction = r.value("rated_speed_fraction", s.rough.rated_speed_fraction);
    s.rough.plateau_power = r.value("plateau_power", s.rough.plateau_power);
    s.rough.bin_width = r.value("bin_width", s.rough.bin_width);
    s.rough.overrepresented_factor = r.value("overrepresented_factor", s.rough.overrepresented_factor);
  }
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  std::vector<std::string> enabled;
  for (auto k : c.enabled_benchmarks) enabled.emplace_back(to_string(k));
  j = nlohmann::json{{"paths",
                      {{"input_csv", c.paths.input_csv},
                       {"cleaned_csv", c.paths.cleaned_csv},
                       {"checkpoint", c.paths.checkpoint},
                       {"output_dir", c.paths.output_dir}}},
                     {"normalization", c.normalization},
                     {"synthesis", c.synthesis},
                     {"raster", c.raster},
                     {"network", c.network},
                     {"train", c.train},
                     {"extraction", c.extraction},
                     {"benchmarks", c.benchmarks},
                     {"enabled_benchmarks", enabled},
                     {"scenario", c.scenario},
                     {"test_split_fraction", c.test_split_fraction},
                     {"mape_cut_in", c.mape_cut_in},
                     {"runtime_repetitions", c.runtime_repetitions},
                     {"seeds", {{"master", c.seed}, {"network", c.network_seed}, {"split", c.split_seed}}}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    c.paths.input_csv = p.value("input_csv", c.paths.input_csv);
    c.paths.cleaned_csv = p.value("cleaned_csv", c.paths.cleaned_csv);
    c.paths.checkpoint = p.value("checkpoint", c.paths.checkpoint);
    c.paths.output_dir = p.value("output_dir", c.paths.output_dir);
  }
  if (j.contains("normalization")) from_json(j.at("normalization"), c.normalization);
  if (j.contains("synthesis")) from_json(j.at("synthesis"), c.synthesis);
  if (j.contains("raster")) from_json(j.at("raster"), c.raster);
  if (j.contains("network")) from_json(j.at("network"), c.network);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  if (j.contains("extraction")) from_json(j.at("extraction"), c.extraction);
  if (j.contains("benchmarks")) from_json(j.at("benchmarks"), c.benchmarks);
  if (j.contains("enabled_benchmarks")) {
    c.enabled_benchmarks.clear();
    for (const auto& k : j.at("enabled_benchmarks")) c.enabled_benchmarks.push_back(benchmark_from_string(k.get<std::string>()));
  }
  if (j.contains("scenario")) from_json(j.at("scenario"), c.scenario);
  c.test_split_fraction = j.value("test_split_fraction", c.test_split_fraction);
  c.mape_cut_in = j.value("mape_cut_in", c.mape_cut_in);
  c.runtime_repetitions = j.value("runtime_repetitions", c.runtime_repetitions);
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    c.seed = s.value("master", c.seed);
    c.network_seed = s.value("network", c.network_seed);
    c.split_seed = s.value("split", c.split_seed);
  }
}

RunConfig load_run_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  RunConfig c;
  try {
    from_json(j, c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  c.validate();
  return c;
}

void save_run_config(const RunConfig& cfg, const std::string& path) { write_json(path, nlohmann::json(cfg)); }

// ------------------------------------------------------------------ training

std::string dataset_digest(const std::vector<SynthSample>& samples) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& s : samples) {
    for (const auto& p : s.scatter.points) {
      feed(&p.x, sizeof p.x);
      feed(&p.y, sizeof p.y);
      const int label = static_cast<int>(p.label);
      feed(&label, sizeof label);
    }
    const int family = static_cast<int>(s.truth.family);
    feed(&family, sizeof family);
    for (double v : s.truth.params) feed(&v, sizeof v);
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

TrainingArtifacts run_dit_training(const RunConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  const std::string out = cfg.paths.output_dir;
  fs::create_directories(out);
  TrainingArtifacts art;
  art.checkpoint = cfg.paths.checkpoint.empty() ? join(out, "model.ckpt") : cfg.paths.checkpoint;
  art.loss_csv = join(out, "loss_history.csv");
  art.manifest = join(out, "manifest.json");

  const auto samples = synthesize_dataset(cfg.synthesis);
  std::size_t truncated = 0;
  for (const auto& s : samples) truncated += s.truncated ? 1 : 0;

  nlohmann::json manifest{{"complete", false},
                          {"seeds",
                           {{"master", cfg.seed},
                            {"synthesis", cfg.synthesis.seed},
                            {"network", cfg.network_seed},
                            {"train", cfg.train.seed}}},
                          {"dataset",
                           {{"n_samples", samples.size()},
                            {"n_truncated", truncated},
                            {"digest", dataset_digest(samples)}}},
                          {"config", cfg},
                          {"checkpoint", art.checkpoint}};
  write_json(art.manifest, manifest);

  const auto render_pair = [&](std::size_t i) {
    return TrainingPair{render_scatter(samples[i].scatter, cfg.raster), render_curve(samples[i].truth, cfg.raster)};
  };
  const std::size_t bytes_per_pair =
      2 * 3 * static_cast<std::size_t>(cfg.raster.width) * cfg.raster.height * sizeof(float);
  constexpr std::size_t kResidentLimit = std::size_t{1} << 30;

  Model model(cfg.network, cfg.network_seed);
  try {
    if (bytes_per_pair * samples.size() <= kResidentLimit) {
      std::vector<TrainingPair> pairs;
      pairs.reserve(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i) pairs.push_back(render_pair(i));
      art.result = train(model, pairs, cfg.train, on_epoch);
    } else {
      art.result = train(model, samples.size(), render_pair, cfg.train, on_epoch);
    }
    save_model(model, art.checkpoint);
    write_loss_history(art.loss_csv, art.result.epoch_loss);
  } catch (const std::exception& e) {
    manifest["error"] = e.what();
    write_json(art.manifest, manifest);
    throw;
  }

  manifest["complete"] = true;
  manifest["final_loss"] = art.result.epoch_loss.empty() ? 0.0 : art.result.epoch_loss.back();
  manifest["train_seconds"] = art.result.seconds;
  manifest["loss_history"] = art.loss_csv;
  write_json(art.manifest, manifest);
  return art;
}

// ------------------------------------------------------------------ modelling

WpcmResult wpcm_curve(const ScatterSet& data, const Model& model, const RasterConfig& raster,
                      const ExtractionConfig& extraction, const std::string& failure_dir) {
  if (data.size() < 10)
    throw DomainError("power curve modelling needs at least 10 points, got " + std::to_string(data.size()));
  WpcmResult res;
  RasterConfig test_frame = raster;
  res.marker_size = marker_size_for_test(static_cast<long long>(data.size()), raster);
  test_frame.marker_size = res.marker_size;
  res.input = render_scatter(data, test_frame);
  res.generated = infer(model, res.input);
  try {
    res.curve = extract(res.generated, raster, extraction);
  } catch (const ExtractionFailure& e) {
    if (failure_dir.empty()) throw;
    fs::create_directories(failure_dir);
    const std::string path = join(failure_dir, "generated_failed.png");
    write_png(path, res.generated);
    throw ExtractionFailure(std::string(e.what()) + " (generated image saved to " + path + ")");
  }
  return res;
}

WpcmArtifacts run_wpcm(const ScatterSet& data, const Model& model, const RunConfig& cfg,
                       const std::string& out_dir) {
  fs::create_directories(out_dir);
  WpcmArtifacts art;
  art.result = wpcm_curve(data, model, cfg.raster, cfg.extraction, out_dir);
  const PiecewiseWpc& curve = art.result.curve;

  art.input_png = join(out_dir, "scada_wpc.png");
  art.generated_png = join(out_dir, "generated_wpc.png");
  art.overlay_png = join(out_dir, "overlay.png");
  art.curve_json = join(out_dir, "curve.json");
  write_png(art.input_png, art.result.input);
  write_png(art.generated_png, art.result.generated);
  write_png(art.overlay_png, render_overlay(data, [&](double x) { return eval_piecewise(curve, x); }, RasterConfig{}));
  write_json(art.curve_json, nlohmann::json{{"curve", curve},
                                            {"n_points", data.size()},
                                            {"marker_size", art.result.marker_size},
                                            {"raster", cfg.raster}});
  return art;
}

double grid_rmse(const std::function<double(double)>& a, const std::function<double(double)>& b, double lo,
                 double hi, int n) {
  if (n < 2 || !(hi > lo)) throw DomainError("grid_rmse needs n >= 2 and hi > lo");
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double e = a(x) - b(x);
    sum += e * e;
  }
  return std::sqrt(sum / n);
}

// ------------------------------------------------------------------ benchmarking

Split split_data(const ScatterSet& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
  if (data.size() < 2) throw DomainError("cannot split fewer than 2 points");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(mix_seed(seed));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.size()))), 1, data.size() - 1);
  Split s;
  for (std::size_t k = 0; k < idx.size(); ++k) (k < n_test ? s.test : s.train).points.push_back(data.points[idx[k]]);
  return s;
}

std::vector<MetricRow> run_benchmark_suite(const ScatterSet& data, const RunConfig& cfg, const ScenarioSpec& spec,
                                           const std::vector<NamedModel>& networks, const ScatterSet* cleaned) {
  cfg.validate();
  spec.validate();
  // With a user-cleaned file the cleaned set itself is split.
  ScenarioSpec effective = spec;
  const ScatterSet* base = &data;
  if (spec.scenario == Scenario::S3Careful && cleaned) {
    base = cleaned;
    effective.scenario = Scenario::S1Raw;
  }
  const Split split = split_data(*base, cfg.test_split_fraction, cfg.split_seed);
  const ScatterSet train_set = apply_scenario(split.train, effective);
  const ScatterSet test_set = apply_cleaning(split.test, effective);
  const auto train_x = xs_of(train_set), train_y = ys_of(train_set);
  const auto test_x = xs_of(test_set), test_y = ys_of(test_set);

  const std::string scenario(to_string(spec.scenario)), pattern(to_string(spec.pattern));
  std::vector<MetricRow> rows;
  const auto score = [&](const std::string& name, const std::function<std::vector<double>()>& predictor) {
    MetricRow row{name, scenario, pattern, {}, {}};
    try {
      if (test_set.empty()) throw DomainError("test split is empty after cleaning");
      row.report = evaluate(predictor(), test_y, test_x, cfg.mape_cut_in);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  };

  for (const auto& nm : networks) {
    score(nm.name, [&] {
      if (!nm.model) throw std::invalid_argument("no checkpoint loaded");
      const auto curve = wpcm_curve(train_set, *nm.model, cfg.raster, cfg.extraction).curve;
      std::vector<double> pred;
      pred.reserve(test_x.size());
      for (double x : test_x) pred.push_back(eval_piecewise(curve, x));
      return pred;
    });
  }
  for (BenchmarkKind kind : cfg.enabled_benchmarks) {
    score(std::string(to_string(kind)), [&] {
      const BenchmarkModel m = fit_benchmark(kind, train_x, train_y, cfg.benchmarks);
      return predict(m, test_x);
    });
  }
  return rows;
}

// ------------------------------------------------------------------ synthetic recovery

RecoverySummary evaluate_recovery(const Model* model, const RunConfig& cfg, const RecoveryConfig& rc,
                                  const std::string& network_name) {
  if (rc.n_cases < 1) throw ConfigError("recovery evaluation needs at least one case");
  rc.scenario.validate();
  SynthesisConfig sc = cfg.synthesis;
  sc.n_samples = rc.n_cases;
  sc.discard_prob = 0.0;
  sc.seed = rc.seed;
  const auto samples = synthesize_dataset(sc);

  RecoverySummary out;
  std::map<std::string, double> sums;
  std::map<std::string, int> ok;
  const auto record = [&](int index, const std::string& name, const std::function<std::function<double(double)>()>& fit,
                          const WpcFunction& truth) {
    RecoveryCase c{index, name, 0.0, {}, {}};
    try {
      const auto curve = fit();
      c.rmse = grid_rmse(curve, [&](double x) { return eval_wpc_function(truth, x); }, rc.grid_lo, rc.grid_hi);
      sums[name] += c.rmse;
      ++ok[name];
    } catch (const std::exception& e) {
      c.error = e.what();
      ++out.failures[name];
    }
    out.failures.try_emplace(name, 0);
    out.cases.push_back(std::move(c));
  };

  for (int i = 0; i < rc.n_cases; ++i) {
    const SynthSample& s = samples[static_cast<std::size_t>(i)];
    const ScatterSet data = apply_scenario(s.scatter, rc.scenario);
    if (model) {
      std::optional<PiecewiseWpc> extracted;
      record(i, network_name, [&]() -> std::function<double(double)> {
        const PiecewiseWpc curve = wpcm_curve(data, *model, cfg.raster, cfg.extraction).curve;
        extracted = curve;
        return [curve](double x) { return eval_piecewise(curve, x); };
      }, s.truth);
      out.cases.back().extracted = std::move(extracted);
    }
    const auto xs = xs_of(data), ys = ys_of(data);
    for (BenchmarkKind kind : rc.benchmarks) {
      record(i, std::string(to_string(kind)), [&]() -> std::function<double(double)> {
        BenchmarkConfig bc = cfg.benchmarks;
        bc.search.seed = derive_seed(bc.search.seed, static_cast<std::uint64_t>(i));
        bc.snn.seed = derive_seed(bc.snn.seed, static_cast<std::uint64_t>(i));
        auto m = std::make_shared<BenchmarkModel>(fit_benchmark(kind, xs, ys, bc));
        return [m](double x) { return predict(*m, x); };
      }, s.truth);
    }
  }
  for (const auto& [name, n] : ok) out.mean_rmse[name] = sums[name] / n;
  return out;
}

void write_recovery_csv(const std::string& path, const RecoverySummary& summary) {
  atomic_write(path, [&](std::ostream& os) {
    os << "case,model,grid_rmse,status\n" << std::setprecision(10);
    for (const auto& c : summary.cases) {
      os << c.index << ',' << c.model << ',';
      if (c.error.empty()) {
        os << c.rmse << ",ok\n";
      } else {
        std::string err = c.error;
        std::replace(err.begin(), err.end(), '"', '\'');
        os << "NA,\"failed: " << err << "\"\n";
      }
    }
  });
}

// ------------------------------------------------------------------ runtime

std::string hardware_description() {
  std::string cpu = "unknown CPU";
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) cpu = trim(line.substr(colon + 1));
      break;
    }
  }
  return cpu + ", " + std::to_string(std::max(1u, std::thread::hardware_concurrency())) + " hardware threads";
}

RuntimeReport measure_runtime(const std::vector<RuntimeSubject>& subjects, int repetitions) {
  if (repetitions < 5) throw ConfigError("runtime measurement needs at least 5 repetitions");
  RuntimeReport report;
  report.hardware = hardware_description();
  for (const auto& s : subjects) {
    s.run();
    std::vector<double> t;
    for (int r = 0; r < repetitions; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      s.run();
      t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    report.rows.push_back({s.name, std::accumulate(t.begin(), t.end(), 0.0) / repetitions,
                           *std::min_element(t.begin(), t.end()), *std::max_element(t.begin(), t.end()),
                           repetitions});
  }
  return report;
}

void write_runtime_csv(const std::string& path, const RuntimeReport& report) {
  atomic_write(path, [&](std::ostream& os) {
    os << "model,mean_seconds,min_seconds,max_seconds,repetitions,hardware\n" << std::setprecision(8);
    for (const auto& r : report.rows)
      os << r.name << ',' << r.mean_seconds << ',' << r.min_seconds << ',' << r.max_seconds << ',' << r.repetitions
         << ",\"" << report.hardware << "\"\n";
  });
}

}  // namespace wpcm
