#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcmnn/dynamics.hpp"
#include "pcmnn/ingest.hpp"
#include "pcmnn/pinn.hpp"

namespace pcmnn {

struct MetricsReport {
  std::string label;
  int n = 0;
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;  // empty when y_true is constant
};

/// MSE, MAE (absolute errors) and R^2 = 1 - SS_res / SS_tot.
/// Throws DataError on a length mismatch or fewer than two samples.
MetricsReport metrics(std::span<const double> y_true, std::span<const double> y_pred, std::string label = "");

/// `label,n,mse,mae,r2`; an undefined R^2 is written as `nan`.
std::vector<std::string> metrics_csv_header();
std::vector<std::string> metrics_csv_row(const MetricsReport& report);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& reports);
/// Aligned plain-text table of the same columns.
std::string metrics_table(const std::vector<MetricsReport>& reports);

struct BacksolveResult {
  Trajectory trajectory;
  MetricsReport metrics;
  std::vector<std::string> warnings;
};

/// Integrates the modulated logistic with the trained alpha from the first
/// observed value and scores it against the observations.
BacksolveResult verify_backsolve(const TrainState& trained, const LogisticParams& params,
                                 const ingest::CompositeSeries& series, const Climate& climate,
                                 const Rk4Options& options = {});

/// Integrates forward from x0 over days 0..horizon_days under the supplied
/// climate. Throws DataError when the climate does not cover the horizon and
/// std::domain_error for x0 <= 0.
Trajectory forecast(const TrainState& trained, const LogisticParams& params, double x0,
                    const Climate& climate_future, int horizon_days, const Rk4Options& options = {});

/// Largest |a - b| divided by the largest |b|.
double sup_relative_gap(std::span<const double> a, std::span<const double> b);

}  // namespace pcmnn
