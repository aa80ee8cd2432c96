#include "wpcm/metrics.hpp"

#include "wpcm/errors.hpp"
#include "wpcm/io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace wpcm {

MetricReport evaluate(const std::vector<double>& pred, const std::vector<double>& truth,
                      const std::vector<double>& wind_speed, double cws, const std::vector<double>& alphas) {
  if (pred.empty()) throw DomainError("evaluate needs at least one point");
  if (pred.size() != truth.size() || pred.size() != wind_speed.size())
    throw DomainError("evaluate: pred, truth and wind_speed lengths differ");
  for (double a : alphas)
    if (!(a >= 0.0)) throw ConfigError("alpha must be non-negative");

  MetricReport r;
  r.n_points = pred.size();
  double se = 0.0, ae = 0.0, abs_truth = 0.0, ape = 0.0;
  std::vector<std::size_t> hits(alphas.size(), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = std::abs(pred[i] - truth[i]);
    se += e * e;
    ae += e;
    abs_truth += std::abs(truth[i]);
    for (std::size_t k = 0; k < alphas.size(); ++k)
      if (e <= alphas[k]) ++hits[k];
    if (wind_speed[i] > cws) {
      if (truth[i] == 0.0) {
        ++r.n_mape_zero_truth;
      } else {
        ape += e / std::abs(truth[i]);
        ++r.n_points_mape;
      }
    }
  }
  const double n = static_cast<double>(r.n_points);
  r.rmse = std::sqrt(se / n);
  r.mae = ae / n;
  if (r.n_points_mape > 0) r.mape_pct = 100.0 * ape / static_cast<double>(r.n_points_mape);
  r.wmape_pct = abs_truth > 0.0 ? 100.0 * ae / abs_truth : (ae == 0.0 ? 0.0 : INFINITY);
  for (std::size_t k = 0; k < alphas.size(); ++k) r.alpha_ss_pct[alphas[k]] = 100.0 * static_cast<double>(hits[k]) / n;
  return r;
}

namespace {

std::string alpha_label(double a) {
  std::ostringstream s;
  s << a;
  return s.str();
}

}  // namespace

void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  std::set<double> alphas;
  for (const auto& row : rows)
    for (const auto& [a, v] : row.report.alpha_ss_pct) alphas.insert(a);
  out << "model,scenario,pattern,rmse,mae,mape_pct,wmape_pct";
  for (double a : alphas) out << ",ss_" << alpha_label(a) << "_pct";
  out << ",n_points,n_points_mape\n";
  out << std::setprecision(10);
  for (const auto& row : rows) {
    const MetricReport& r = row.report;
    if (row.failed()) {
      out << row.model << ',' << row.scenario << ',' << row.pattern;
      for (std::size_t k = 0; k < 4 + alphas.size() + 2; ++k) out << ",failed";
      out << '\n';
      continue;
    }
    out << row.model << ',' << row.scenario << ',' << row.pattern << ',' << r.rmse << ',' << r.mae << ',';
    if (r.mape_pct) out << *r.mape_pct;
    else out << "NA";
    out << ',' << r.wmape_pct;
    for (double a : alphas) {
      const auto it = r.alpha_ss_pct.find(a);
      out << ',';
      if (it != r.alpha_ss_pct.end()) out << it->second;
      else out << "NA";
    }
    out << ',' << r.n_points << ',' << r.n_points_mape << '\n';
  }
}

void write_metric_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  atomic_write(path, [&](std::ostream& os) { write_metric_csv(os, rows); });
}

void write_metric_long_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "model,scenario,pattern,metric,value,status\n" << std::setprecision(10);
  for (const auto& row : rows) {
    const std::string prefix = row.model + ',' + row.scenario + ',' + row.pattern + ',';
    std::vector<std::pair<std::string, std::optional<double>>> cells;
    const MetricReport& r = row.report;
    cells.emplace_back("rmse", r.rmse);
    cells.emplace_back("mae", r.mae);
    cells.emplace_back("mape_pct", r.mape_pct);
    cells.emplace_back("wmape_pct", r.wmape_pct);
    for (const auto& [a, v] : r.alpha_ss_pct) cells.emplace_back("ss_" + alpha_label(a) + "_pct", v);
    if (row.failed()) {
      std::string err = row.error;
      std::replace(err.begin(), err.end(), '"', '\'');
      std::replace(err.begin(), err.end(), '\n', ' ');
      for (const char* m : {"rmse", "mae", "mape_pct", "wmape_pct"})
        out << prefix << m << ",failed,\"" << err << "\"\n";
      continue;
    }
    for (const auto& [name, v] : cells) {
      out << prefix << name << ',';
      if (v) out << *v << ",ok\n";
      else out << "NA,ok\n";
    }
  }
}

void write_metric_long_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  atomic_write(path, [&](std::ostream& os) { write_metric_long_csv(os, rows); });
}

void to_json(nlohmann::json& j, const MetricReport& r) {
  nlohmann::json ss = nlohmann::json::object();
  for (const auto& [a, v] : r.alpha_ss_pct) ss[alpha_label(a)] = v;
  j = nlohmann::json{{"rmse", r.rmse},
                     {"mae", r.mae},
                     {"mape_pct", r.mape_pct ? nlohmann::json(*r.mape_pct) : nlohmann::json(nullptr)},
                     {"wmape_pct", r.wmape_pct},
                     {"alpha_ss_pct", ss},
                     {"n_points", r.n_points},
                     {"n_points_mape", r.n_points_mape},
                     {"n_mape_zero_truth", r.n_mape_zero_truth}};
}

}  // namespace wpcm
