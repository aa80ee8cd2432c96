#include "wpcm/synthesis.hpp"

#include "wpcm/errors.hpp"
#include "wpcm/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace wpcm {

std::string_view to_string(PointLabel l) {
  switch (l) {
    case PointLabel::Normal: return "normal";
    case PointLabel::Stacked: return "stacked";
    case PointLabel::Sparse: return "sparse";
    case PointLabel::Unknown: break;
  }
  return "unknown";
}

PointLabel label_from_string(std::string_view s) {
  if (s == "normal") return PointLabel::Normal;
  if (s == "stacked") return PointLabel::Stacked;
  if (s == "sparse") return PointLabel::Sparse;
  if (s == "unknown" || s.empty()) return PointLabel::Unknown;
  throw ConfigError("unknown point label '" + std::string(s) + "'");
}

std::size_t ScatterSet::count(PointLabel label) const {
  return static_cast<std::size_t>(std::count_if(
      points.begin(), points.end(), [label](const ScatterPoint& p) { return p.label == label; }));
}

void ScatterSet::append(const ScatterSet& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
}

void SynthesisConfig::validate() const {
  if (n_samples <= 0 || n_normal <= 0 || n_stacked <= 0 || n_sparse <= 0)
    throw ConfigError("SynthesisConfig: all counts must be positive");
  if (!(discard_prob >= 0.0 && discard_prob <= 1.0))
    throw ConfigError("SynthesisConfig: discard_prob must lie in [0, 1]");
  if (!(0.0 <= discard_lo && discard_lo <= discard_hi && discard_hi <= 1.0))
    throw ConfigError("SynthesisConfig: discard range must satisfy 0 <= lo <= hi <= 1");
  if (!(sigma_normal >= 0.0) || !(sigma_stacked >= 0.0))
    throw ConfigError("SynthesisConfig: noise amplitudes must be non-negative");
}

std::vector<double> variance_projection(std::span<const double> d) {
  if (d.empty()) throw ConfigError("variance_projection: empty input");
  const auto [lo_it, hi_it] = std::minmax_element(d.begin(), d.end());
  const double lo = *lo_it, range = *hi_it - *lo_it;
  std::vector<double> out(d.size(), 0.0);
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double eta = (d[i] - lo) / range;
    out[i] = eta < 0.7 ? eta : std::sqrt(1.0 - std::pow(eta - 1.0, 4));
  }
  return out;
}

ScatterSet synthesize_normal(const WpcFunction& f, int count, double sigma_normal, Rng& rng) {
  if (count <= 0) throw ConfigError("synthesize_normal: count must be positive");
  std::vector<double> xs(count), d(count);
  for (int i = 0; i < count; ++i) {
    xs[i] = uniform(rng, 0.0, 1.0);
    d[i] = wpc_derivative(f, xs[i]);
  }
  const std::vector<double> phi = variance_projection(d);
  ScatterSet out;
  out.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double eps = standard_normal(rng);
    const double y = eval_wpc_function(f, xs[i]) + eps * sigma_normal * phi[i];
    out.points.push_back({xs[i], std::clamp(y, 0.0, 1.0), PointLabel::Normal});
  }
  return out;
}

namespace {

// Smallest x with f(x) > level for a non-decreasing f with f(1) > level.
double first_exceedance(const WpcFunction& f, double level) {
  double lo = 0.0, hi = 1.0;
  if (eval_wpc_function(f, 0.0) > level) return 0.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (eval_wpc_function(f, mid) > level ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

ScatterSet synthesize_stacked(const WpcFunction& f, int count, double sigma_stacked, Rng& rng,
                              StackedMode mode) {
  if (count <= 0) throw ConfigError("synthesize_stacked: count must be positive");
  ScatterSet out;
  out.points.reserve(count);
  if (mode == StackedMode::AroundCurve) {
    for (int i = 0; i < count; ++i) {
      const double x = uniform(rng, 0.0, 1.0);
      const double y = eval_wpc_function(f, x) + standard_normal(rng) * sigma_stacked;
      out.points.push_back({x, std::clamp(y, 0.0, 1.0), PointLabel::Stacked});
    }
    return out;
  }
  constexpr int kMaxRedraws = 100;
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    const double level = uniform(rng, 0.1, 0.9);
    if (!(eval_wpc_function(f, 1.0) > level)) continue;
    const double x_min = first_exceedance(f, level);
    for (int i = 0; i < count; ++i) {
      const double x = uniform(rng, x_min, 1.0);
      const double y = level + standard_normal(rng) * sigma_stacked;
      out.points.push_back({x, std::clamp(y, 0.0, 1.0), PointLabel::Stacked});
    }
    return out;
  }
  return out;  // degenerate flat curve: no stripe fits under it
}

ScatterSet synthesize_sparse(int count, Rng& rng) {
  if (count <= 0) throw ConfigError("synthesize_sparse: count must be positive");
  ScatterSet out;
  out.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double a = uniform(rng, 0.0, 1.0);
    const double b = uniform(rng, 0.0, 1.0);
    out.points.push_back({a, b, PointLabel::Sparse});
  }
  return out;
}

DiscardResult random_discard(const ScatterSet& s, double discard_prob, double lo, double hi,
                             Rng& rng) {
  DiscardResult r;
  if (!(uniform(rng, 0.0, 1.0) < discard_prob)) {
    r.scatter = s;
    return r;
  }
  r.truncated = true;
  r.axis = uniform(rng, 0.0, 1.0) < 0.5 ? DiscardAxis::Speed : DiscardAxis::Power;
  r.threshold = lo == hi ? lo : uniform(rng, lo, hi);
  r.scatter.points.reserve(s.size());
  for (const ScatterPoint& p : s.points) {
    const double v = r.axis == DiscardAxis::Speed ? p.x : p.y;
    if (v <= r.threshold) r.scatter.points.push_back(p);
  }
  return r;
}

SynthSample synthesize_sample(const SynthesisConfig& cfg, Rng& rng) {
  cfg.validate();
  SynthSample out;
  out.truth = sample_wpc_function(rng, cfg.ranges);
  ScatterSet ssd = synthesize_normal(out.truth, cfg.n_normal, cfg.sigma_normal, rng);
  ssd.append(synthesize_stacked(out.truth, cfg.n_stacked, cfg.sigma_stacked, rng, cfg.stacked_mode));
  ssd.append(synthesize_sparse(cfg.n_sparse, rng));
  DiscardResult d = random_discard(ssd, cfg.discard_prob, cfg.discard_lo, cfg.discard_hi, rng);
  out.scatter = std::move(d.scatter);
  out.truncated = d.truncated;
  return out;
}

std::vector<SynthSample> synthesize_dataset(const SynthesisConfig& cfg) {
  cfg.validate();
  std::vector<SynthSample> out;
  out.reserve(cfg.n_samples);
  for (int i = 0; i < cfg.n_samples; ++i) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    SynthSample s = synthesize_sample(cfg, rng);
    s.seed = seed;
    out.push_back(std::move(s));
  }
  return out;
}

void write_scatter_csv(std::ostream& out, const ScatterSet& s) {
  out << "wind_speed,wind_power,label\n";
  out.precision(17);
  for (const ScatterPoint& p : s.points) out << p.x << ',' << p.y << ',' << to_string(p.label) << '\n';
}

void write_scatter_csv(const std::string& path, const ScatterSet& s) {
  atomic_write(path, [&](std::ostream& out) { write_scatter_csv(out, s); });
}

ScatterSet read_scatter_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CorruptFile("scatter CSV: empty file");
  ScatterSet s;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    try {
      s.points.push_back({std::stod(a), std::stod(b), label_from_string(c)});
    } catch (const std::invalid_argument&) {
      throw CorruptFile("scatter CSV: bad row at line " + std::to_string(lineno));
    }
  }
  return s;
}

ScatterSet read_scatter_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_scatter_csv(in);
}

void to_json(nlohmann::json& j, const SynthesisConfig& c) {
  j = {{"n_samples", c.n_samples},
       {"n_normal", c.n_normal},
       {"n_stacked", c.n_stacked},
       {"n_sparse", c.n_sparse},
       {"sigma_normal", c.sigma_normal},
       {"sigma_stacked", c.sigma_stacked},
       {"stacked_mode", c.stacked_mode == StackedMode::Stripe ? "stripe" : "around_curve"},
       {"discard_prob", c.discard_prob},
       {"discard_range", {c.discard_lo, c.discard_hi}},
       {"seed", c.seed},
       {"ade_a1_range", {c.ranges.a1_lo, c.ranges.a1_hi}}};
}

void from_json(const nlohmann::json& j, SynthesisConfig& c) {
  c.n_samples = j.value("n_samples", c.n_samples);
  c.n_normal = j.value("n_normal", c.n_normal);
  c.n_stacked = j.value("n_stacked", c.n_stacked);
  c.n_sparse = j.value("n_sparse", c.n_sparse);
  c.sigma_normal = j.value("sigma_normal", c.sigma_normal);
  c.sigma_stacked = j.value("sigma_stacked", c.sigma_stacked);
  const std::string mode = j.value("stacked_mode", std::string("stripe"));
  if (mode == "stripe") c.stacked_mode = StackedMode::Stripe;
  else if (mode == "around_curve") c.stacked_mode = StackedMode::AroundCurve;
  else throw ConfigError("unknown stacked_mode '" + mode + "'");
  c.discard_prob = j.value("discard_prob", c.discard_prob);
  if (j.contains("discard_range")) {
    c.discard_lo = j["discard_range"].at(0).get<double>();
    c.discard_hi = j["discard_range"].at(1).get<double>();
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("ade_a1_range")) {
    c.ranges.a1_lo = j["ade_a1_range"].at(0).get<double>();
    c.ranges.a1_hi = j["ade_a1_range"].at(1).get<double>();
  }
}

}  // namespace wpcm
