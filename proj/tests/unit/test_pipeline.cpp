#include "doctest.h"

#include "wpcm/errors.hpp"
#include "wpcm/io.hpp"
#include "wpcm/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wpcm;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const fs::path p = fs::path(output_dir_or("test_pipeline_out")) / name;
  fs::remove_all(p);
  return p.string();
}

SynthSample whole_sample(std::uint64_t seed, double sigma = 0.05) {
  SynthesisConfig cfg;
  cfg.discard_prob = 0.0;
  cfg.sigma_normal = sigma;
  Rng rng(seed);
  return synthesize_sample(cfg, rng);
}

RunConfig tiny_run(const std::string& out) {
  RunConfig c = RunConfig::desk_profile();
  c.synthesis.n_samples = 8;
  c.network.base_channels = 2;
  c.train.n_iter = 2;
  c.paths.output_dir = out;
  return c;
}

}  // namespace

TEST_CASE("SCADA ingestion") {
  std::istringstream in(
      "timestamp,wind_power,wind_speed\n"
      "t0,1000,12.5\n"
      "t1,2000,25\n"
      "t2,nan,3\n"
      "t3,-50,4\n"
      "t4,oops,5\n");
  NormalizationSpec spec;
  spec.cutout_speed = 25.0;
  spec.rated_power = 2000.0;
  const IngestResult r = ingest_scada(in, spec);
  CHECK(r.rejected == 2);
  REQUIRE(r.data.size() == 3);
  CHECK(r.data.points[0].x == 0.5);
  CHECK(r.data.points[0].y == 0.5);
  CHECK(r.data.points[1].y == 1.0);
  CHECK(r.data.points[2].y == 0.0);
  CHECK(r.data.points[0].label == PointLabel::Unknown);

  std::istringstream autoin("wind_speed,wind_power\n10,100\n20,200\n");
  const IngestResult a = ingest_scada(autoin);
  CHECK(a.cutout_speed == doctest::Approx(21.0));
  CHECK(a.rated_power == doctest::Approx(199.0));
  CHECK(a.data.points[1].y == 1.0);

  std::istringstream missing("speed,wind_power\n1,2\n");
  CHECK_THROWS_AS(ingest_scada(missing), ConfigError);
  std::istringstream empty("");
  CHECK_THROWS_AS(ingest_scada(empty), ConfigError);
  CHECK_THROWS_AS(ingest_scada(std::string("/nonexistent/file.csv")), ConfigError);
}

TEST_CASE("scenario construction") {
  const SynthSample s = whole_sample(3);
  ScenarioSpec spec;
  CHECK(apply_scenario(s.scatter, spec) == s.scatter);

  spec.scenario = Scenario::S3Careful;
  const ScatterSet careful = apply_scenario(s.scatter, spec);
  CHECK(careful.size() == 1000);
  CHECK(careful.count(PointLabel::Normal) == 1000);

  ScatterSet unlabelled = s.scatter;
  for (auto& p : unlabelled.points) p.label = PointLabel::Unknown;
  CHECK_THROWS_AS(apply_scenario(unlabelled, spec), ConfigError);
  CHECK(apply_scenario(unlabelled, spec, &careful) == careful);

  ScenarioSpec idp;
  idp.pattern = Pattern::IDP;
  idp.idp_quantile = 0.6;
  const ScatterSet cut = apply_scenario(s.scatter, idp);
  std::vector<double> xs;
  for (const auto& p : s.scatter.points) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  const double pos = 0.6 * (xs.size() - 1);
  const double q = xs[std::size_t(pos)] + (pos - std::floor(pos)) * (xs[std::size_t(pos) + 1] - xs[std::size_t(pos)]);
  for (const auto& p : cut.points) CHECK(p.x <= q);
  CHECK(cut.size() == doctest::Approx(0.6 * s.scatter.size()).epsilon(0.01));

  CHECK(scenario_from_string("S2") == Scenario::S2Rough);
  CHECK(pattern_from_string("IDP") == Pattern::IDP);
  CHECK_THROWS_AS(scenario_from_string("S4"), ConfigError);
}

TEST_CASE("rough filter removes stripes and stopped points") {
  int stacked_before = 0, stacked_after = 0, normal_before = 0, normal_after = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSample s = whole_sample(100 + seed);
    for (int k = 0; k < 40; ++k) s.scatter.points.push_back({0.9 - 0.005 * k, 0.0, PointLabel::Sparse});
    const ScatterSet out = rough_filter(s.scatter, RoughFilterConfig{});
    stacked_before += static_cast<int>(s.scatter.count(PointLabel::Stacked));
    stacked_after += static_cast<int>(out.count(PointLabel::Stacked));
    normal_before += static_cast<int>(s.scatter.count(PointLabel::Normal));
    normal_after += static_cast<int>(out.count(PointLabel::Normal));
    for (const auto& p : out.points) CHECK_FALSE((p.y == 0.0 && p.x >= 0.7));
  }
  CHECK(stacked_after < stacked_before / 2);
  CHECK(normal_after > 0.85 * normal_before);
  RoughFilterConfig bad;
  bad.overrepresented_factor = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("run configuration") {
  RunConfig c = RunConfig::desk_profile();
  CHECK_NOTHROW(c.validate());
  CHECK(c.raster.width == 64);
  CHECK(c.network.base_channels == 16);
  CHECK(c.synthesis.n_samples == 500);
  CHECK(c.test_split_fraction == 0.2);

  c.reseed(5);
  RunConfig d = RunConfig::desk_profile();
  d.reseed(5);
  CHECK(c.synthesis.seed == d.synthesis.seed);
  CHECK(c.synthesis.seed != c.network_seed);
  c.normalization.rated_power = 1500.0;
  c.scenario.pattern = Pattern::IDP;
  c.enabled_benchmarks = {BenchmarkKind::DE, BenchmarkKind::Spline};

  const std::string dir = scratch("config");
  save_run_config(c, dir + "/run.json");
  const RunConfig back = load_run_config(dir + "/run.json");
  CHECK(nlohmann::json(back) == nlohmann::json(c));
  CHECK(*back.normalization.rated_power == 1500.0);
  CHECK_FALSE(back.normalization.cutout_speed.has_value());

  {
    std::ofstream f(dir + "/partial.json");
    f << R"({"test_split_fraction": 0.3, "network": {"base_channels": 8}})";
  }
  const RunConfig partial = load_run_config(dir + "/partial.json");
  CHECK(partial.test_split_fraction == 0.3);
  CHECK(partial.network.base_channels == 8);
  CHECK(partial.network.depth == 4);
  {
    std::ofstream f(dir + "/bad.json");
    f << R"({"test_split_fraction": 1.5})";
  }
  CHECK_THROWS_AS(load_run_config(dir + "/bad.json"), ConfigError);
  {
    std::ofstream f(dir + "/broken.json");
    f << "{ not json";
  }
  CHECK_THROWS_AS(load_run_config(dir + "/broken.json"), ConfigError);

  RunConfig odd = RunConfig::desk_profile();
  odd.raster = RasterConfig::scaled(0.3);
  CHECK_THROWS_AS(odd.validate(), ConfigError);
}

TEST_CASE("seeded split") {
  const SynthSample s = whole_sample(4);
  const Split a = split_data(s.scatter, 0.2, 9);
  const Split b = split_data(s.scatter, 0.2, 9);
  CHECK(a.test == b.test);
  CHECK(a.train == b.train);
  CHECK(a.test.size() == 280);
  CHECK(a.train.size() == 1120);
  const Split c = split_data(s.scatter, 0.2, 10);
  CHECK_FALSE(c.test == a.test);
  CHECK_THROWS_AS(split_data(s.scatter, 1.0, 1), ConfigError);
}

TEST_CASE("training run persists a loadable checkpoint") {
  const std::string out = scratch("train") + "/nested/dir";
  const RunConfig cfg = tiny_run(out);
  const TrainingArtifacts art = run_dit_training(cfg);
  CHECK(fs::exists(art.checkpoint));
  CHECK(fs::exists(art.loss_csv));
  const auto manifest = nlohmann::json::parse(read_text_file(art.manifest));
  CHECK(manifest.at("complete").get<bool>());
  CHECK(manifest.at("dataset").at("n_samples").get<int>() == 8);
  CHECK(manifest.at("seeds").at("synthesis").get<std::uint64_t>() == cfg.synthesis.seed);
  const Model m = load_model(art.checkpoint, cfg.network);
  CHECK(m.trained());
  CHECK(art.result.epoch_loss.size() == 2);

  RunConfig again = cfg;
  again.paths.output_dir = scratch("train_again");
  const TrainingArtifacts art2 = run_dit_training(again);
  const auto manifest2 = nlohmann::json::parse(read_text_file(art2.manifest));
  CHECK(manifest2.at("dataset") == manifest.at("dataset"));

  RunConfig bad = cfg;
  bad.train.n_iter = 0;
  CHECK_THROWS_AS(run_dit_training(bad), ConfigError);
}

TEST_CASE("modelling artifacts") {
  RunConfig cfg = tiny_run(scratch("wpcm"));
  cfg.network.base_channels = 4;
  Model model(cfg.network, 3);
  std::vector<TrainingPair> pairs;
  SynthesisConfig sc;
  sc.n_samples = 8;
  for (const auto& s : synthesize_dataset(sc))
    pairs.push_back({render_scatter(s.scatter, cfg.raster), render_curve(s.truth, cfg.raster)});
  TrainConfig tc;
  tc.n_iter = 60;
  tc.batch_size = 2;
  train(model, pairs, tc);

  ScatterSet nine;
  for (int i = 0; i < 9; ++i) nine.points.push_back({i / 9.0, i / 9.0, PointLabel::Unknown});
  CHECK_THROWS_AS(run_wpcm(nine, model, cfg, cfg.paths.output_dir), DomainError);

  const SynthSample s = whole_sample(21);
  try {
    const WpcmArtifacts art = run_wpcm(s.scatter, model, cfg, cfg.paths.output_dir);
    CHECK(art.result.marker_size == doctest::Approx(marker_size_for_test(1400)));
    const WpcImage overlay = read_png(art.overlay_png);
    CHECK(overlay.width == 256);
    CHECK(overlay.height == 256);
    CHECK(read_png(art.generated_png).width == 64);
    const auto rec = nlohmann::json::parse(read_text_file(art.curve_json));
    CHECK(rec.at("n_points").get<int>() == 1400);
    for (int i = 0; i <= 100; ++i) {
      const double y = eval_piecewise(art.result.curve, i / 100.0);
      CHECK(y >= 0.0);
      CHECK(y <= 1.0);
    }
  } catch (const ExtractionFailure&) {
    CHECK(fs::exists(cfg.paths.output_dir + "/generated_failed.png"));
  }

  CHECK(grid_rmse([](double x) { return x; }, [](double x) { return x; }) == 0.0);
  CHECK(grid_rmse([](double) { return 1.0; }, [](double) { return 0.0; }) == doctest::Approx(1.0));
}

TEST_CASE("benchmark suite on a noiseless world") {
  RunConfig cfg = RunConfig::desk_profile();
  cfg.benchmarks.search.iterations = 300;
  cfg.benchmarks.snn.epochs = 1500;
  const SynthSample s = whole_sample(31, 0.0);
  ScenarioSpec spec;
  spec.scenario = Scenario::S3Careful;
  const std::vector<NamedModel> none{{"DITU-net", nullptr}};
  const auto rows = run_benchmark_suite(s.scatter, cfg, spec, none);
  REQUIRE(rows.size() == 1 + all_benchmarks().size());
  const std::size_t n_test_normal = split_data(s.scatter, 0.2, cfg.split_seed).test.count(PointLabel::Normal);
  CHECK(rows[0].failed());
  CHECK(rows[0].model == "DITU-net");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    INFO(rows[i].model);
    CHECK_FALSE(rows[i].failed());
    CHECK(rows[i].report.rmse <= 0.02);
    CHECK(rows[i].scenario == "S3_careful");
    CHECK(rows[i].report.n_points == n_test_normal);
  }

  cfg.enabled_benchmarks = {BenchmarkKind::DE, BenchmarkKind::Spline};
  const auto a = run_benchmark_suite(s.scatter, cfg, spec, {});
  const auto b = run_benchmark_suite(s.scatter, cfg, spec, {});
  std::ostringstream sa, sb;
  write_metric_long_csv(sa, a);
  write_metric_long_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("model,scenario,pattern,metric,value,status\n", 0) == 0);

  std::ostringstream failed;
  write_metric_long_csv(failed, rows);
  CHECK(failed.str().find("DITU-net,S3_careful,NP,rmse,failed") != std::string::npos);
}

TEST_CASE("runtime measurement") {
  int calls = 0;
  const RuntimeReport r = measure_runtime({{"noop", [&] { ++calls; }}}, 5);
  CHECK(calls == 6);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].repetitions == 5);
  CHECK(r.rows[0].min_seconds <= r.rows[0].mean_seconds);
  CHECK(r.rows[0].mean_seconds <= r.rows[0].max_seconds);
  CHECK_FALSE(r.hardware.empty());
  CHECK_THROWS_AS(measure_runtime({{"noop", [] {}}}, 4), ConfigError);
}
