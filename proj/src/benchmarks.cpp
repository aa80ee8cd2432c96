#include "wpcm/benchmarks.hpp"

#include "wpcm/curve_models.hpp"
#include "wpcm/errors.hpp"
#include "wpcm/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wpcm {

// ------------------------------------------------------------------ search

bool Bounds::contains(const std::vector<double>& p) const {
  if (p.size() != dim()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] >= lo[i] && p[i] <= hi[i])) return false;
  return true;
}

void Bounds::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw ConfigError("bounds need matching, non-empty lo/hi vectors");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i])
      throw ConfigError("bounds must be finite with lo <= hi in every dimension");
}

void SearchConfig::validate() const {
  if (population < 4) throw ConfigError("search population must be >= 4");
  if (iterations < 1) throw ConfigError("search iterations must be >= 1");
  if (!(mix_rate > 0.0 && mix_rate <= 1.0)) throw ConfigError("mix_rate must lie in (0, 1]");
}

SearchResult bsa_minimize(const Objective& objective, const Bounds& bounds, const SearchConfig& cfg) {
  bounds.validate();
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(cfg.population);
  const std::size_t d = bounds.dim();
  Rng rng(mix_seed(cfg.seed));
  auto rand01 = [&] { return uniform(rng, 0.0, 1.0); };
  auto random_point = [&] {
    std::vector<double> p(d);
    for (std::size_t j = 0; j < d; ++j) p[j] = uniform(rng, bounds.lo[j], bounds.hi[j]);
    return p;
  };
  auto safe_eval = [&](const std::vector<double>& p) {
    const double v = objective(p);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> pop(n), old(n);
  std::vector<double> fit(n);
  for (std::size_t i = 0; i < n; ++i) {
    pop[i] = random_point();
    fit[i] = safe_eval(pop[i]);
  }
  for (std::size_t i = 0; i < n; ++i) old[i] = random_point();

  std::size_t best_i = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  SearchResult res{pop[best_i], fit[best_i], {}};
  res.trajectory.reserve(cfg.iterations);

  std::vector<std::size_t> dims(d);
  std::vector<std::vector<double>> trial(n, std::vector<double>(d));
  std::uniform_int_distribution<std::size_t> pick_dim(0, d - 1);
  for (int it = 0; it < cfg.iterations; ++it) {
    // Selection-I: refresh the historical population, then permute it.
    if (rand01() < rand01()) old = pop;
    std::shuffle(old.begin(), old.end(), rng);

    const double F = 3.0 * standard_normal(rng);
    const bool multi = rand01() < rand01();
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<char> mask(d, 0);
      if (multi) {
        std::iota(dims.begin(), dims.end(), std::size_t{0});
        std::shuffle(dims.begin(), dims.end(), rng);
        const auto k = static_cast<std::size_t>(std::ceil(cfg.mix_rate * rand01() * static_cast<double>(d)));
        for (std::size_t m = 0; m < std::min(k, d); ++m) mask[dims[m]] = 1;
      } else {
        mask[pick_dim(rng)] = 1;
      }
      for (std::size_t j = 0; j < d; ++j) {
        double v = pop[i][j] + (mask[j] ? F * (old[i][j] - pop[i][j]) : 0.0);
        if (v < bounds.lo[j] || v > bounds.hi[j]) v = uniform(rng, bounds.lo[j], bounds.hi[j]);
        trial[i][j] = v;
      }
    }
    // Selection-II: greedy replacement.
    for (std::size_t i = 0; i < n; ++i) {
      const double f = safe_eval(trial[i]);
      if (f < fit[i]) {
        fit[i] = f;
        pop[i] = trial[i];
        if (f < res.value) {
          res.value = f;
          res.best = trial[i];
        }
      }
    }
    res.trajectory.push_back(res.value);
  }
  return res;
}

// -------------------------------------------------------------- parametric

std::string_view to_string(ParametricFamily f) {
  switch (f) {
    case ParametricFamily::DE: return "de";
    case ParametricFamily::ADE: return "ade";
    case ParametricFamily::PLF4: return "plf4";
    case ParametricFamily::PLF5: return "plf5";
  }
  return "de";
}

ParametricFamily parametric_from_string(std::string_view s) {
  if (s == "de") return ParametricFamily::DE;
  if (s == "ade") return ParametricFamily::ADE;
  if (s == "plf4") return ParametricFamily::PLF4;
  if (s == "plf5") return ParametricFamily::PLF5;
  throw ConfigError("unknown parametric family '" + std::string(s) + "'");
}

double eval_parametric(ParametricFamily f, const std::vector<double>& p, double x) {
  switch (f) {
    case ParametricFamily::DE: return eval_family_unchecked(Family::DE, p, x);
    case ParametricFamily::ADE: return eval_family_unchecked(Family::ADE, p, x);
    case ParametricFamily::PLF4:
    case ParametricFamily::PLF5: {
      const double a = p[0], d = p[1], c = p[2], b = p[3];
      const double g = f == ParametricFamily::PLF5 ? p[4] : 1.0;
      const double r = std::pow(std::max(x, 0.0) / c, b);
      return d + (a - d) / std::pow(1.0 + r, g);
    }
  }
  return 0.0;
}

Bounds default_bounds(ParametricFamily f) {
  switch (f) {
    case ParametricFamily::DE: return {{1.0, -30.0}, {100.0, -1.0}};
    case ParametricFamily::ADE: return {{0.0, -30.0, -40.0, 0.0}, {10.0, 50.0, 30.0, 40.0}};
    case ParametricFamily::PLF4: return {{-0.2, 0.8, 1e-3, 1.0}, {0.2, 1.2, 1.0, 50.0}};
    case ParametricFamily::PLF5: return {{-0.2, 0.8, 1e-3, 1.0, 0.1}, {0.2, 1.2, 1.0, 50.0, 10.0}};
  }
  return {};
}

namespace {

void check_data(const std::vector<double>& x, const std::vector<double>& y, const char* what) {
  if (x.size() != y.size()) throw ConfigError(std::string(what) + ": x and y sizes differ");
  if (x.size() < 10) throw ConfigError(std::string(what) + " needs at least 10 points");
}

}  // namespace

ParametricSpec fit_parametric(const std::vector<double>& x, const std::vector<double>& y, ParametricFamily family,
                              const SearchConfig& cfg) {
  check_data(x, y, "fit_parametric");
  ParametricSpec spec;
  spec.family = family;
  spec.bounds = default_bounds(family);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  const auto objective = [&](const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = eval_parametric(family, p, x[i]) - y[i];
      s += e * e;
    }
    return s * inv_n;
  };
  const SearchResult r = bsa_minimize(objective, spec.bounds, cfg);
  spec.params = r.best;
  spec.train_mse = r.value;
  return spec;
}

// --------------------------------------------------------------------- SNN

void SnnConfig::validate() const {
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (epochs < 1) throw ConfigError("SNN epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("SNN learning_rate must be positive");
}

double SnnModel::eval(double x) const {
  const double u = 2.0 * x - 1.0;
  double out = b2;
  for (std::size_t k = 0; k < w1.size(); ++k) out += w2[k] * std::tanh(w1[k] * u + b1[k]);
  return out;
}

SnnModel fit_snn(const std::vector<double>& x, const std::vector<double>& y, const SnnConfig& cfg) {
  cfg.validate();
  check_data(x, y, "fit_snn");
  using Eigen::ArrayXd;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  const Eigen::Index h = cfg.hidden_units;
  VectorXd u(n), t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    u[i] = 2.0 * x[static_cast<std::size_t>(i)] - 1.0;
    t[i] = y[static_cast<std::size_t>(i)];
  }

  Rng rng(mix_seed(cfg.seed));
  // Parameter vector layout: w1 (h), b1 (h), w2 (h), b2 (1).
  VectorXd theta(3 * h + 1);
  for (Eigen::Index k = 0; k < h; ++k) {
    theta[k] = 3.0 * standard_normal(rng);
    theta[h + k] = 3.0 * standard_normal(rng);
    theta[2 * h + k] = standard_normal(rng) / std::sqrt(static_cast<double>(h));
  }
  theta[3 * h] = 0.5;

  VectorXd m = VectorXd::Zero(theta.size()), v = VectorXd::Zero(theta.size()), grad(theta.size());
  const double b1c = 0.9, b2c = 0.999, eps = 1e-8;
  SnnModel model;
  model.loss_history.reserve(cfg.epochs);
  MatrixXd H(n, h);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto w1 = theta.segment(0, h), b1 = theta.segment(h, h), w2 = theta.segment(2 * h, h);
    H = ((u * w1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();
    const VectorXd e = (H * w2).array() + theta[3 * h] - t.array();
    const double loss = e.squaredNorm() / static_cast<double>(n);
    if (!std::isfinite(loss))
      throw NonFiniteLoss("SNN loss became non-finite at epoch " + std::to_string(epoch));
    model.loss_history.push_back(loss);
    const VectorXd ge = e * (2.0 / static_cast<double>(n));
    const MatrixXd gz = ((ge * w2.transpose()).array() * (1.0 - H.array().square())).matrix();
    grad.segment(0, h) = gz.transpose() * u;
    grad.segment(h, h) = gz.colwise().sum().transpose();
    grad.segment(2 * h, h) = H.transpose() * ge;
    grad[3 * h] = ge.sum();
    m = b1c * m + (1.0 - b1c) * grad;
    v = b2c * v + (1.0 - b2c) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1c, epoch), c2 = 1.0 - std::pow(b2c, epoch);
    theta.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
  model.w1.assign(theta.data(), theta.data() + h);
  model.b1.assign(theta.data() + h, theta.data() + 2 * h);
  model.w2.assign(theta.data() + 2 * h, theta.data() + 3 * h);
  model.b2 = theta[3 * h];
  return model;
}

// ------------------------------------------------------------------ spline

void SplineConfig::validate() const {
  if (knots < 2) throw ConfigError("spline needs at least 2 knots");
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) throw ConfigError("spline smoothing must be finite and >= 0");
}

namespace {

constexpr int kDegree = 3;

std::vector<double> knot_vector(int knots) {
  std::vector<double> t;
  for (int i = 0; i < kDegree; ++i) t.push_back(0.0);
  for (int i = 0; i < knots; ++i) t.push_back(static_cast<double>(i) / (knots - 1));
  for (int i = 0; i < kDegree; ++i) t.push_back(1.0);
  return t;
}

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

/// Values and second derivatives of every cubic basis function at x in [0, 1].
void basis_at(const std::vector<double>& t, double x, std::vector<double>& b, std::vector<double>* b2) {
  const int m = static_cast<int>(t.size()) - 1;  // number of degree-0 functions
  std::vector<double> n0(m, 0.0);
  const double xc = std::clamp(x, 0.0, 1.0);
  int span = kDegree;
  while (span + 1 < m - kDegree && xc >= t[span + 1]) ++span;
  n0[span] = 1.0;
  std::vector<std::vector<double>> levels{n0};
  for (int p = 1; p <= kDegree; ++p) {
    const auto& prev = levels.back();
    std::vector<double> cur(m - p, 0.0);
    for (int i = 0; i < m - p; ++i)
      cur[i] = safe_div(xc - t[i], t[i + p] - t[i]) * prev[i] +
               safe_div(t[i + p + 1] - xc, t[i + p + 1] - t[i + 1]) * prev[i + 1];
    levels.push_back(std::move(cur));
  }
  b = levels[kDegree];
  if (b2 == nullptr) return;
  // N'_{i,2} from degree-1 values, then N''_{i,3} from N'_{i,2}.
  const auto& n1 = levels[1];
  std::vector<double> d2(m - 2, 0.0);
  for (int i = 0; i < m - 2; ++i)
    d2[i] = 2.0 * (safe_div(n1[i], t[i + 2] - t[i]) - safe_div(n1[i + 1], t[i + 3] - t[i + 1]));
  b2->assign(m - 3, 0.0);
  for (int i = 0; i < m - 3; ++i)
    (*b2)[i] = 3.0 * (safe_div(d2[i], t[i + 3] - t[i]) - safe_div(d2[i + 1], t[i + 4] - t[i + 1]));
}

}  // namespace

double SplineModel::eval(double x) const {
  if (coeffs.empty()) throw std::logic_error("spline is not fitted");
  std::vector<double> b;
  basis_at(knot_vector(knots), x, b, nullptr);
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += b[i] * coeffs[i];
  return s;
}

SplineModel fit_spline(const std::vector<double>& x, const std::vector<double>& y, const SplineConfig& cfg) {
  cfg.validate();
  check_data(x, y, "fit_spline");
  const std::vector<double> t = knot_vector(cfg.knots);
  const int nb = cfg.knots + kDegree - 1;
  const double inv_n = 1.0 / static_cast<double>(x.size());

  // Augmented least squares [B / sqrt(n); sqrt(lambda) S] c = [y / sqrt(n); 0] with
  // S^T S = Omega keeps heavy smoothing well conditioned.
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  const int extra = cfg.smoothing > 0.0 ? nb : 0;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + extra, nb);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + extra);
  const double row_scale = std::sqrt(inv_n);
  std::vector<double> b, b2;
  for (Eigen::Index i = 0; i < n; ++i) {
    basis_at(t, x[static_cast<std::size_t>(i)], b, nullptr);
    for (int k = 0; k < nb; ++k) M(i, k) = row_scale * b[k];
    rhs[i] = row_scale * y[static_cast<std::size_t>(i)];
  }
  if (extra > 0) {
    // Second derivatives are linear on each knot interval; two-point Gauss is exact.
    const double g = 0.5 / std::sqrt(3.0);
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(nb, nb);
    for (int k = 0; k + 1 < cfg.knots; ++k) {
      const double a = static_cast<double>(k) / (cfg.knots - 1), w = 1.0 / (cfg.knots - 1);
      for (double s : {0.5 - g, 0.5 + g}) {
        basis_at(t, a + s * w, b, &b2);
        const Eigen::Map<const Eigen::VectorXd> dv(b2.data(), nb);
        omega.noalias() += 0.5 * w * dv * dv.transpose();
      }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(omega);
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    M.bottomRows(nb) = std::sqrt(cfg.smoothing) * root.asDiagonal() * es.eigenvectors().transpose();
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  if (qr.rank() < nb)
    throw NumericalRankError("spline system is rank deficient (" + std::to_string(qr.rank()) + " of " +
                             std::to_string(nb) + "); use fewer knots or a positive smoothing weight");
  const Eigen::VectorXd c = qr.solve(rhs);
  SplineModel model;
  model.knots = cfg.knots;
  model.coeffs.assign(c.data(), c.data() + nb);
  return model;
}

// ----------------------------------------------------------------- common

std::string_view to_string(BenchmarkKind k) {
  switch (k) {
    case BenchmarkKind::DE: return "de";
    case BenchmarkKind::ADE: return "ade";
    case BenchmarkKind::PLF4: return "plf4";
    case BenchmarkKind::PLF5: return "plf5";
    case BenchmarkKind::SNN: return "snn";
    case BenchmarkKind::Spline: return "spline";
  }
  return "de";
}

BenchmarkKind benchmark_from_string(std::string_view s) {
  for (BenchmarkKind k : all_benchmarks())
    if (to_string(k) == s) return k;
  throw ConfigError("unknown benchmark '" + std::string(s) + "' (expected de, ade, plf4, plf5, snn or spline)");
}

const std::vector<BenchmarkKind>& all_benchmarks() {
  static const std::vector<BenchmarkKind> kinds{BenchmarkKind::DE,   BenchmarkKind::ADE, BenchmarkKind::PLF4,
                                                BenchmarkKind::PLF5, BenchmarkKind::SNN, BenchmarkKind::Spline};
  return kinds;
}

BenchmarkModel fit_benchmark(BenchmarkKind kind, const std::vector<double>& x, const std::vector<double>& y,
                             const BenchmarkConfig& cfg) {
  switch (kind) {
    case BenchmarkKind::DE: return fit_parametric(x, y, ParametricFamily::DE, cfg.search);
    case BenchmarkKind::ADE: return fit_parametric(x, y, ParametricFamily::ADE, cfg.search);
    case BenchmarkKind::PLF4: return fit_parametric(x, y, ParametricFamily::PLF4, cfg.search);
    case BenchmarkKind::PLF5: return fit_parametric(x, y, ParametricFamily::PLF5, cfg.search);
    case BenchmarkKind::SNN: return fit_snn(x, y, cfg.snn);
    case BenchmarkKind::Spline: return fit_spline(x, y, cfg.spline);
  }
  return {};
}

double predict(const BenchmarkModel& model, double x) {
  const double raw = std::visit(
      [x](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, std::monostate>) {
          throw std::logic_error("benchmark model is not fitted");
        } else if constexpr (std::is_same_v<M, ParametricSpec>) {
          return eval_parametric(m.family, m.params, x);
        } else {
          return m.eval(x);
        }
      },
      model);
  return std::isfinite(raw) ? std::clamp(raw, 0.0, 1.0) : 0.0;
}

std::vector<double> predict(const BenchmarkModel& model, const std::vector<double>& x) {
  std::vector<double> out;
  out.reserve(x.size());
  for (double v : x) out.push_back(predict(model, v));
  return out;
}

std::string benchmark_name(const BenchmarkModel& model) {
  if (const auto* p = std::get_if<ParametricSpec>(&model)) return std::string(to_string(p->family));
  if (std::holds_alternative<SnnModel>(model)) return "snn";
  if (std::holds_alternative<SplineModel>(model)) return "spline";
  return "unfitted";
}

// ------------------------------------------------------------------- json

void to_json(nlohmann::json& j, const Bounds& b) { j = nlohmann::json{{"lo", b.lo}, {"hi", b.hi}}; }

void from_json(const nlohmann::json& j, Bounds& b) {
  j.at("lo").get_to(b.lo);
  j.at("hi").get_to(b.hi);
  b.validate();
}

void to_json(nlohmann::json& j, const SearchConfig& c) {
  j = nlohmann::json{
      {"population", c.population}, {"iterations", c.iterations}, {"mix_rate", c.mix_rate}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SearchConfig& c) {
  const SearchConfig d;
  c.population = j.value("population", d.population);
  c.iterations = j.value("iterations", d.iterations);
  c.mix_rate = j.value("mix_rate", d.mix_rate);
  c.seed = j.value("seed", d.seed);
  c.validate();
}

void to_json(nlohmann::json& j, const SnnConfig& c) {
  j = nlohmann::json{{"hidden_units", c.hidden_units},
                     {"epochs", c.epochs},
                     {"learning_rate", c.learning_rate},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SnnConfig& c) {
  const SnnConfig d;
  c.hidden_units = j.value("hidden_units", d.hidden_units);
  c.epochs = j.value("epochs", d.epochs);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.seed = j.value("seed", d.seed);
  c.validate();
}

void to_json(nlohmann::json& j, const SplineConfig& c) {
  j = nlohmann::json{{"knots", c.knots}, {"smoothing", c.smoothing}};
}

void from_json(const nlohmann::json& j, SplineConfig& c) {
  const SplineConfig d;
  c.knots = j.value("knots", d.knots);
  c.smoothing = j.value("smoothing", d.smoothing);
  c.validate();
}

void to_json(nlohmann::json& j, const BenchmarkConfig& c) {
  j = nlohmann::json{{"search", c.search}, {"snn", c.snn}, {"spline", c.spline}};
}

void from_json(const nlohmann::json& j, BenchmarkConfig& c) {
  c = BenchmarkConfig{};
  if (j.contains("search")) c.search = j.at("search").get<SearchConfig>();
  if (j.contains("snn")) c.snn = j.at("snn").get<SnnConfig>();
  if (j.contains("spline")) c.spline = j.at("spline").get<SplineConfig>();
}

nlohmann::json model_to_json(const BenchmarkModel& m) {
  if (const auto* p = std::get_if<ParametricSpec>(&m))
    return {{"kind", to_string(p->family)}, {"params", p->params}, {"bounds", p->bounds}, {"train_mse", p->train_mse}};
  if (const auto* s = std::get_if<SnnModel>(&m))
    return {{"kind", "snn"}, {"w1", s->w1}, {"b1", s->b1}, {"w2", s->w2}, {"b2", s->b2}};
  if (const auto* s = std::get_if<SplineModel>(&m))
    return {{"kind", "spline"}, {"knots", s->knots}, {"coeffs", s->coeffs}};
  return {{"kind", "unfitted"}};
}

BenchmarkModel model_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "unfitted") return {};
  if (kind == "snn") {
    SnnModel s;
    j.at("w1").get_to(s.w1);
    j.at("b1").get_to(s.b1);
    j.at("w2").get_to(s.w2);
    j.at("b2").get_to(s.b2);
    if (s.w1.size() != s.b1.size() || s.w1.size() != s.w2.size()) throw ConfigError("SNN record has ragged weights");
    return s;
  }
  if (kind == "spline") {
    SplineModel s;
    j.at("knots").get_to(s.knots);
    j.at("coeffs").get_to(s.coeffs);
    if (s.knots < 2 || static_cast<int>(s.coeffs.size()) != s.knots + kDegree - 1)
      throw ConfigError("spline record has inconsistent knots and coefficients");
    return s;
  }
  ParametricSpec p;
  p.family = parametric_from_string(kind);
  j.at("params").get_to(p.params);
  p.bounds = j.contains("bounds") ? j.at("bounds").get<Bounds>() : default_bounds(p.family);
  p.train_mse = j.value("train_mse", 0.0);
  if (p.params.size() != p.bounds.dim()) throw ConfigError("parametric record has the wrong parameter count");
  return p;
}

}  // namespace wpcm
