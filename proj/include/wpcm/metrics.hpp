#pragma once

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wpcm {

struct MetricReport {
  double rmse = 0.0;
  double mae = 0.0;
  /// Empty when no point survives the cut-in filter.
  std::optional<double> mape_pct;
  double wmape_pct = 0.0;
  std::map<double, double> alpha_ss_pct;
  std::size_t n_points = 0;
  std::size_t n_points_mape = 0;
  /// Points above cut-in that MAPE skipped because their truth is zero.
  std::size_t n_mape_zero_truth = 0;
};

inline const std::vector<double>& default_alphas() {
  static const std::vector<double> a{0.05, 0.10, 0.15};
  return a;
}

/// `cws` is the normalized cut-in speed: MAPE only uses points with speed > cws.
MetricReport evaluate(const std::vector<double>& pred, const std::vector<double>& truth,
                      const std::vector<double>& wind_speed, double cws,
                      const std::vector<double>& alphas = default_alphas());

/// One row per (model, scenario, pattern) cell.
struct MetricRow {
  std::string model, scenario, pattern;
  MetricReport report;
  /// Non-empty when the model could not be fitted or evaluated; metric cells then read "failed".
  std::string error;

  bool failed() const { return !error.empty(); }
};

/// Wide table, one line per row.
void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows);
void write_metric_csv(const std::string& path, const std::vector<MetricRow>& rows);

/// Long table `model,scenario,pattern,metric,value,status`, one line per (row, metric).
void write_metric_long_csv(std::ostream& out, const std::vector<MetricRow>& rows);
void write_metric_long_csv(const std::string& path, const std::vector<MetricRow>& rows);

void to_json(nlohmann::json& j, const MetricReport& r);

}  // namespace wpcm
