#include "CLI11.hpp"

#include "wpcm/errors.hpp"
#include "wpcm/io.hpp"
#include "wpcm/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace wpcm;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  bool desk = false;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
};

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.desk ? RunConfig::desk_profile() : RunConfig{};
  if (!c.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(c.config_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config '" + c.config_path + "' is not valid JSON: " + e.what());
    }
    from_json(j, cfg);
  }
  if (c.seed) cfg.reseed(*c.seed);
  if (!c.output_dir.empty()) cfg.paths.output_dir = c.output_dir;
  else cfg.paths.output_dir = output_dir_or(cfg.paths.output_dir);
  cfg.validate();
  return cfg;
}

bool has_label_column(const std::string& path) {
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  return header.find("label") != std::string::npos;
}

/// Normalized scatter CSVs (written by `synth`) are read directly; anything else goes through ingestion.
ScatterSet load_scatter(const std::string& path, const RunConfig& cfg) {
  if (has_label_column(path)) return read_scatter_csv(path);
  const IngestResult r = ingest_scada(path, cfg.normalization);
  std::cerr << "ingested " << r.data.size() << " rows (" << r.rejected << " rejected), cut-out speed "
            << r.cutout_speed << ", rated power " << r.rated_power << '\n';
  return r.data;
}

std::string checkpoint_path(const RunConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!cfg.paths.checkpoint.empty()) return cfg.paths.checkpoint;
  return (fs::path(cfg.paths.output_dir) / "model.ckpt").string();
}

void add_scenario_flags(CLI::App* cmd, std::string& scenario, std::string& pattern, double& quantile) {
  cmd->add_option("--scenario", scenario, "S1_raw, S2_rough or S3_careful");
  cmd->add_option("--pattern", pattern, "NP or IDP");
  cmd->add_option("--idp-quantile", quantile, "Speed quantile kept under IDP")->check(CLI::Range(0.0, 1.0));
}

ScenarioSpec scenario_from_flags(ScenarioSpec base, const std::string& scenario, const std::string& pattern,
                                 double quantile) {
  if (!scenario.empty()) base.scenario = scenario_from_string(scenario);
  if (!pattern.empty()) base.pattern = pattern_from_string(pattern);
  if (quantile > 0.0) base.idp_quantile = quantile;
  base.validate();
  return base;
}

std::vector<BenchmarkKind> parse_benchmarks(const std::vector<std::string>& names) {
  std::vector<BenchmarkKind> out;
  for (const auto& n : names) out.push_back(benchmark_from_string(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wind power curve modelling from scatter images"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("-c,--config", common.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_flag("--desk", common.desk, "Start from the desk-scale profile (64x64 frame, base 16, 500 samples)");
  app.add_option("--seed", common.seed, "Master seed; derives every component seed");
  app.add_option("-o,--output-dir", common.output_dir, "Output directory (default: WPCM_OUTPUT_DIR or config)");

  // synth
  auto* synth = app.add_subcommand("synth", "Write synthetic scatter CSVs with their ground-truth curves");
  int synth_n = 10;
  bool synth_png = false, synth_scada = false;
  double scada_cutout = 25.0, scada_rated = 2000.0;
  synth->add_option("-n,--samples", synth_n, "Number of samples")->check(CLI::PositiveNumber);
  synth->add_flag("--png", synth_png, "Also write the input and target images");
  synth->add_flag("--scada", synth_scada, "Write physical wind_speed/wind_power columns instead of normalized ones");
  synth->add_option("--cutout-speed", scada_cutout, "Cut-out speed used with --scada");
  synth->add_option("--rated-power", scada_rated, "Rated power used with --scada");

  // train
  auto* train_cmd = app.add_subcommand("train", "Synthesize, rasterize and train the generator");
  int epochs = 0;
  train_cmd->add_option("--epochs", epochs, "Override the number of epochs")->check(CLI::PositiveNumber);

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "Model one scatter with a trained checkpoint");
  std::string infer_input, infer_ckpt, infer_cleaned, infer_scenario, infer_pattern;
  double infer_q = 0.0;
  infer_cmd->add_option("input", infer_input, "SCADA or scatter CSV")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--checkpoint", infer_ckpt, "Checkpoint file");
  infer_cmd->add_option("--cleaned", infer_cleaned, "Pre-cleaned CSV for the careful scenario")->check(CLI::ExistingFile);
  add_scenario_flags(infer_cmd, infer_scenario, infer_pattern, infer_q);

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "Hold out a test split and score every model on it");
  std::string bench_input, bench_ckpt, bench_dcae, bench_cleaned, bench_scenario, bench_pattern;
  std::vector<std::string> bench_models;
  double bench_q = 0.0;
  bool bench_runtime = false;
  bench_cmd->add_option("input", bench_input, "SCADA or scatter CSV")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--checkpoint", bench_ckpt, "U-net checkpoint");
  bench_cmd->add_option("--dcae-checkpoint", bench_dcae, "Autoencoder checkpoint (no skip connections)");
  bench_cmd->add_option("--cleaned", bench_cleaned, "Pre-cleaned CSV for the careful scenario")->check(CLI::ExistingFile);
  bench_cmd->add_option("--benchmarks", bench_models, "Subset of de, ade, plf4, plf5, snn, spline")->delimiter(',');
  bench_cmd->add_flag("--runtime", bench_runtime, "Also time each model");
  add_scenario_flags(bench_cmd, bench_scenario, bench_pattern, bench_q);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score recovery of known curves on held-out synthetic scatters");
  std::string eval_ckpt, eval_scenario, eval_pattern;
  std::vector<std::string> eval_models{"de"};
  int eval_n = 50;
  double eval_q = 0.0;
  std::uint64_t eval_seed = 777;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file");
  eval_cmd->add_option("-n,--cases", eval_n, "Number of held-out cases")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--holdout-seed", eval_seed, "Seed of the held-out stream");
  eval_cmd->add_option("--benchmarks", eval_models, "Benchmarks to compare against")->delimiter(',');
  add_scenario_flags(eval_cmd, eval_scenario, eval_pattern, eval_q);

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "Render a scatter, optionally with a curve record over it");
  std::string plot_input, plot_curve, plot_out = "plot.png";
  plot_cmd->add_option("input", plot_input, "SCADA or scatter CSV")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--curve", plot_curve, "curve.json written by infer")->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", plot_out, "Output PNG path");

  // show-config
  auto* show_cmd = app.add_subcommand("show-config", "Print the effective configuration as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = resolve_config(common);
    const std::string out = cfg.paths.output_dir;

    if (*show_cmd) {
      std::cout << nlohmann::json(cfg).dump(2) << '\n';
      return 0;
    }

    if (*synth) {
      SynthesisConfig sc = cfg.synthesis;
      sc.n_samples = synth_n;
      const auto samples = synthesize_dataset(sc);
      fs::create_directories(out);
      nlohmann::json truths = nlohmann::json::array();
      for (std::size_t i = 0; i < samples.size(); ++i) {
        std::ostringstream name;
        name << "sample_" << std::setw(4) << std::setfill('0') << i;
        const std::string base = (fs::path(out) / name.str()).string();
        if (synth_scada) {
          atomic_write(base + ".csv", [&](std::ostream& os) {
            os << "wind_speed,wind_power\n" << std::setprecision(10);
            for (const auto& p : samples[i].scatter.points) os << p.x * scada_cutout << ',' << p.y * scada_rated << '\n';
          });
        } else {
          write_scatter_csv(base + ".csv", samples[i].scatter);
        }
        if (synth_png) {
          write_png(base + "_input.png", render_scatter(samples[i].scatter, cfg.raster));
          write_png(base + "_target.png", render_curve(samples[i].truth, cfg.raster));
        }
        truths.push_back({{"file", name.str() + ".csv"},
                          {"truth", samples[i].truth},
                          {"truncated", samples[i].truncated},
                          {"n_points", samples[i].scatter.size()}});
      }
      atomic_write((fs::path(out) / "truths.json").string(), [&](std::ostream& os) { os << truths.dump(2) << '\n'; });
      std::cout << "wrote " << samples.size() << " samples to " << out << '\n';
      return 0;
    }

    if (*train_cmd) {
      if (epochs > 0) cfg.train.n_iter = epochs;
      const auto art = run_dit_training(cfg, [&](const EpochReport& r) {
        std::cout << "epoch " << r.epoch << '/' << cfg.train.n_iter << "  loss " << std::setprecision(6) << r.loss
                  << "  (" << std::setprecision(3) << r.seconds << " s)\n"
                  << std::flush;
      });
      std::cout << "checkpoint: " << art.checkpoint << "\nloss history: " << art.loss_csv
                << "\nmanifest: " << art.manifest << '\n';
      return 0;
    }

    if (*infer_cmd) {
      const Model model = load_model(checkpoint_path(cfg, infer_ckpt), cfg.network);
      const ScatterSet raw = load_scatter(infer_input, cfg);
      const ScenarioSpec spec = scenario_from_flags(cfg.scenario, infer_scenario, infer_pattern, infer_q);
      ScatterSet cleaned;
      if (!infer_cleaned.empty()) cleaned = load_scatter(infer_cleaned, cfg);
      const ScatterSet data = apply_scenario(raw, spec, infer_cleaned.empty() ? nullptr : &cleaned);
      const WpcmArtifacts art = run_wpcm(data, model, cfg, out);
      const PiecewiseWpc& c = art.result.curve;
      std::cout << "points used: " << data.size() << " (marker size " << art.result.marker_size << ")\n"
                << "cut-in speed " << c.x_cutin << (c.cutin_converged ? "" : " (fallback)") << ", rated speed "
                << c.x_rated << (c.rated_converged ? "" : " (fallback)") << '\n'
                << "curve: " << art.curve_json << "\noverlay: " << art.overlay_png << '\n';
      return 0;
    }

    if (*bench_cmd) {
      const ScatterSet data = load_scatter(bench_input, cfg);
      const ScenarioSpec spec = scenario_from_flags(cfg.scenario, bench_scenario, bench_pattern, bench_q);
      if (!bench_models.empty()) cfg.enabled_benchmarks = parse_benchmarks(bench_models);
      ScatterSet cleaned;
      if (!bench_cleaned.empty()) cleaned = load_scatter(bench_cleaned, cfg);
      std::optional<Model> unet, dcae;
      std::vector<NamedModel> nets;
      const std::string unet_path = checkpoint_path(cfg, bench_ckpt);
      if (fs::exists(unet_path)) {
        unet.emplace(load_model(unet_path));
        nets.push_back({"DITU-net", &*unet});
      } else {
        std::cerr << "no U-net checkpoint at " << unet_path << "; scoring benchmarks only\n";
      }
      if (!bench_dcae.empty()) {
        dcae.emplace(load_model(bench_dcae));
        nets.push_back({"DCAE", &*dcae});
      }
      const auto rows = run_benchmark_suite(data, cfg, spec, nets, bench_cleaned.empty() ? nullptr : &cleaned);
      fs::create_directories(out);
      const std::string long_csv = (fs::path(out) / "metrics_long.csv").string();
      const std::string wide_csv = (fs::path(out) / "metrics.csv").string();
      write_metric_long_csv(long_csv, rows);
      write_metric_csv(wide_csv, rows);
      write_metric_csv(std::cout, rows);
      if (bench_runtime) {
        const Split split = split_data(data, cfg.test_split_fraction, cfg.split_seed);
        const ScatterSet train_set = apply_scenario(split.train, spec, bench_cleaned.empty() ? nullptr : &cleaned);
        std::vector<RuntimeSubject> subjects;
        for (const auto& n : nets)
          subjects.push_back({n.name, [&, m = n.model] { wpcm_curve(train_set, *m, cfg.raster, cfg.extraction); }});
        std::vector<double> xs, ys;
        for (const auto& p : train_set.points) {
          xs.push_back(p.x);
          ys.push_back(p.y);
        }
        for (BenchmarkKind k : cfg.enabled_benchmarks)
          subjects.push_back({std::string(to_string(k)), [&, k] { fit_benchmark(k, xs, ys, cfg.benchmarks); }});
        const RuntimeReport rep = measure_runtime(subjects, cfg.runtime_repetitions);
        write_runtime_csv((fs::path(out) / "runtime.csv").string(), rep);
        std::cout << "\nhardware: " << rep.hardware << '\n';
        for (const auto& r : rep.rows) std::cout << r.name << ": " << r.mean_seconds << " s mean\n";
      }
      std::cout << "\ntables: " << long_csv << ", " << wide_csv << '\n';
      return 0;
    }

    if (*eval_cmd) {
      std::optional<Model> model;
      const std::string path = checkpoint_path(cfg, eval_ckpt);
      if (fs::exists(path)) model.emplace(load_model(path, cfg.network));
      else std::cerr << "no checkpoint at " << path << "; scoring benchmarks only\n";
      RecoveryConfig rc;
      rc.n_cases = eval_n;
      rc.seed = eval_seed;
      rc.scenario = scenario_from_flags(cfg.scenario, eval_scenario, eval_pattern, eval_q);
      rc.benchmarks = parse_benchmarks(eval_models);
      const RecoverySummary sum = evaluate_recovery(model ? &*model : nullptr, cfg, rc);
      const std::string csv = (fs::path(out) / "recovery.csv").string();
      write_recovery_csv(csv, sum);
      std::cout << "grid RMSE against the generating curves (" << eval_n << " cases, "
                << to_string(rc.scenario.scenario) << '/' << to_string(rc.scenario.pattern) << ")\n";
      for (const auto& [name, fails] : sum.failures) {
        const auto it = sum.mean_rmse.find(name);
        std::cout << "  " << std::left << std::setw(10) << name << ' ';
        if (it != sum.mean_rmse.end()) std::cout << std::setprecision(5) << it->second;
        else std::cout << "n/a";
        std::cout << "  failures " << fails << '\n';
      }
      std::cout << "per-case table: " << csv << '\n';
      return 0;
    }

    if (*plot_cmd) {
      const ScatterSet data = load_scatter(plot_input, cfg);
      const RasterConfig frame;
      if (plot_curve.empty()) {
        RasterConfig rc = frame;
        rc.marker_size = marker_size_for_test(static_cast<long long>(std::max<std::size_t>(1, data.size())), frame);
        write_png(plot_out, render_scatter(data, rc));
      } else {
        const auto rec = nlohmann::json::parse(read_text_file(plot_curve));
        const PiecewiseWpc curve = rec.contains("curve") ? rec.at("curve").get<PiecewiseWpc>() : rec.get<PiecewiseWpc>();
        write_png(plot_out, render_overlay(data, [&](double x) { return eval_piecewise(curve, x); }, frame));
      }
      std::cout << "wrote " << plot_out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
