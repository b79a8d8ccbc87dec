#include "pcmnn/evaluate.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "pcmnn/csv.hpp"
#include "pcmnn/error.hpp"

namespace pcmnn {

MetricsReport metrics(std::span<const double> y_true, std::span<const double> y_pred, std::string label) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("metrics: length mismatch " + std::to_string(y_true.size()) + " vs " +
                    std::to_string(y_pred.size()));
  }
  if (y_true.size() < 2) throw DataError("metrics: need at least two samples");
  MetricsReport r;
  r.label = std::move(label);
  r.n = static_cast<int>(y_true.size());
  const double n = static_cast<double>(y_true.size());
  double mean = 0.0;
  for (double y : y_true) mean += y;
  mean /= n;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true[i] - y_pred[i];
    ss_res += e * e;
    abs_sum += std::abs(e);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  r.mse = ss_res / n;
  r.mae = abs_sum / n;
  if (ss_tot > 0.0) r.r2 = 1.0 - ss_res / ss_tot;
  return r;
}

std::vector<std::string> metrics_csv_header() { return {"label", "n", "mse", "mae", "r2"}; }

std::vector<std::string> metrics_csv_row(const MetricsReport& r) {
  return {r.label, std::to_string(r.n), csv::format_double(r.mse), csv::format_double(r.mae),
          r.r2 ? csv::format_double(*r.r2) : "nan"};
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& reports) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) rows.push_back(metrics_csv_row(r));
  csv::write(path, metrics_csv_header(), rows);
}

std::string metrics_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "label" << std::right << std::setw(6) << "n" << std::setw(16) << "mse"
     << std::setw(16) << "mae" << std::setw(12) << "r2" << '\n';
  for (const auto& r : reports) {
    os << std::left << std::setw(14) << r.label << std::right << std::setw(6) << r.n << std::fixed
       << std::setprecision(6) << std::setw(16) << r.mse << std::setw(16) << r.mae << std::setw(12);
    if (r.r2) {
      os << *r.r2;
    } else {
      os << "undefined";
    }
    os << '\n' << std::defaultfloat;
  }
  return os.str();
}

BacksolveResult verify_backsolve(const TrainState& trained, const LogisticParams& params,
                                 const ingest::CompositeSeries& series, const Climate& climate,
                                 const Rk4Options& options) {
  if (series.size() < 2) throw DataError("verify_backsolve: need at least two observations");
  BacksolveResult out;
  const double x0 = series.population.front();
  std::vector<double> grid;
  for (int d : series.day_index) grid.push_back(static_cast<double>(d));
  if (!(x0 > 0.0)) {
    out.warnings.push_back("first observation is zero; back-solve trajectory is identically zero");
    out.trajectory.t = grid;
    out.trajectory.x.assign(grid.size(), 0.0);
  } else {
    out.trajectory = integrate_rk4(params, trained.alpha_function(), x0, climate, grid, options);
  }
  out.metrics = metrics(series.population, out.trajectory.x, "backsolve");
  return out;
}

Trajectory forecast(const TrainState& trained, const LogisticParams& params, double x0, const Climate& climate_future,
                    int horizon_days, const Rk4Options& options) {
  if (!(x0 > 0.0)) throw std::domain_error("forecast: x0 must be positive");
  if (horizon_days < 0) throw std::invalid_argument("forecast: negative horizon");
  if (static_cast<double>(horizon_days) > climate_future.last_day()) {
    throw DataError("forecast: climate covers " + csv::format_double(climate_future.last_day()) +
                    " days, horizon is " + std::to_string(horizon_days));
  }
  if (horizon_days == 0) {
    Trajectory t;
    t.t = {0.0};
    t.x = {x0};
    return t;
  }
  const auto grid = day_grid(static_cast<std::size_t>(horizon_days) + 1);
  return integrate_rk4(params, trained.alpha_function(), x0, climate_future, grid, options);
}

double sup_relative_gap(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("sup_relative_gap: bad lengths");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return den > 0.0 ? num / den : (num > 0.0 ? INFINITY : 0.0);
}

}  // namespace pcmnn
