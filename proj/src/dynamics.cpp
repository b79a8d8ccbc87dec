#include "pcmnn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pcmnn/csv.hpp"
#include "pcmnn/error.hpp"

namespace pcmnn {

void LogisticParams::validate() const {
  if (!(A > 0.0) || !(B > 0.0)) throw UsageError("logistic parameters: A and B must be positive");
  if (!std::isfinite(A / B)) throw UsageError("logistic parameters: carrying capacity not finite");
  if (!(alpha_min < alpha_max)) throw UsageError("logistic parameters: alpha_min must be below alpha_max");
}

AlphaFunction constant_alpha(double value) {
  return [value](double, double, double) { return value; };
}

AlphaFunction sinusoidal_alpha(double amplitude, double period_days) {
  return [amplitude, period_days](double, double, double t) {
    return amplitude * std::sin(2.0 * std::numbers::pi * t / period_days);
  };
}

Climate Climate::constant(double temperature, double humidity, std::size_t days) {
  Climate c;
  c.temperature.assign(days, temperature);
  c.humidity.assign(days, humidity);
  return c;
}

std::pair<double, double> Climate::at(double t_day) const {
  if (temperature.empty() || humidity.size() != temperature.size()) throw DataError("climate: empty or ragged series");
  constexpr double kSlack = 1e-9;
  if (!(t_day >= -kSlack && t_day <= last_day() + kSlack)) {
    throw DataError("climate: no data at t = " + csv::format_double(t_day) + " (covers 0.." +
                    csv::format_double(last_day()) + ")");
  }
  if (size() == 1) return {temperature[0], humidity[0]};
  const double clamped = std::clamp(t_day, 0.0, last_day());
  const auto i = std::min(static_cast<std::size_t>(clamped), size() - 2);
  const double w = clamped - static_cast<double>(i);
  return {(1.0 - w) * temperature[i] + w * temperature[i + 1], (1.0 - w) * humidity[i] + w * humidity[i + 1]};
}

double logistic_closed_form(const LogisticParams& params, double x0, double t) {
  if (!(x0 > 0.0)) throw std::domain_error("logistic_closed_form: x0 must be positive");
  if (!(t >= 0.0)) throw std::domain_error("logistic_closed_form: t must be nonnegative");
  const double K = params.carrying_capacity();
  return K / (1.0 + (K - x0) / x0 * std::exp(-params.A * t));
}

double rhs(const LogisticParams& params, const AlphaFunction& alpha, double x, double temperature, double humidity,
           double t) {
  return (params.A + alpha(temperature, humidity, t)) * x - params.B * x * x;
}

Trajectory integrate_rk4(const LogisticParams& params, const AlphaFunction& alpha, double x0, const Climate& climate,
                         std::span<const double> t_grid, const Rk4Options& options) {
  if (t_grid.empty()) throw std::invalid_argument("integrate_rk4: empty time grid");
  if (!(options.step > 0.0)) throw std::invalid_argument("integrate_rk4: step must be positive");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("integrate_rk4: time grid must be increasing");
  }
  climate.at(t_grid.front());
  climate.at(t_grid.back());

  auto f = [&](double t, double x) {
    const auto [T, H] = climate.at(t);
    return rhs(params, alpha, x, T, H, t);
  };

  Trajectory out;
  double x = x0;
  double t = t_grid.front();
  out.t.push_back(t);
  out.x.push_back(x);
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double span = t_grid[k] - t;
    const auto n_sub = static_cast<long>(std::ceil(span / options.step - 1e-9));
    const double h = span / static_cast<double>(n_sub);
    const double start = t;
    for (long s = 0; s < n_sub; ++s) {
      const double ts = start + static_cast<double>(s) * h;
      const double k1 = f(ts, x);
      const double k2 = f(ts + 0.5 * h, x + 0.5 * h * k1);
      const double k3 = f(ts + 0.5 * h, x + 0.5 * h * k2);
      const double k4 = f(ts + h, x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!std::isfinite(x)) {
        throw NumericalError("integrate_rk4: state blew up at t = " + csv::format_double(ts + h));
      }
      if (x < 0.0) {
        x = 0.0;
        ++out.clip_count;
      }
    }
    t = t_grid[k];
    out.t.push_back(t);
    out.x.push_back(x);
  }
  return out;
}

std::string SignDiagnostic::report() const {
  std::ostringstream os;
  os << "sign agreement: " << agree << " / " << n << " samples (" << csv::format_double(fraction()) << ")\n";
  return os.str();
}

SignDiagnostic sign_diagnostic(const LogisticParams& params, std::span<const double> alpha,
                               std::span<const double> temperature, std::span<const double> humidity, double m1,
                               double m2) {
  if (alpha.size() != temperature.size() || alpha.size() != humidity.size()) {
    throw std::invalid_argument("sign_diagnostic: series lengths disagree");
  }
  SignDiagnostic d;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double dT = temperature[i] - params.T_star;
    const double dH = humidity[i] - params.H_star;
    const bool favourable = dT * dT <= m1 && dH * dH <= m2;
    ++d.n;
    if (favourable == (alpha[i] >= 0.0)) ++d.agree;
  }
  return d;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < trajectory.t.size(); ++i) {
    rows.push_back({csv::format_double(trajectory.t[i]), csv::format_double(trajectory.x[i])});
  }
  csv::write(path, {"t_day", "population"}, rows);
}

std::vector<double> day_grid(std::size_t n) {
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i);
  return grid;
}

}  // namespace pcmnn
