#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pcmnn {

/// Growth and climate parameters of the modulated logistic model
/// dx/dt = (A + alpha(T, H, t)) x - B x^2.
struct LogisticParams {
  double A = 0.372;      // baseline growth rate, 1/day
  double B = 0.0008;     // density inhibition, 1/(individual day)
  double T_star = 21.0;  // thermal optimum, deg C
  double H_star = 84.0;  // hygric optimum, percent
  double alpha_min = -1.372;
  double alpha_max = 0.628;

  double carrying_capacity() const { return A / B; }
  /// Throws UsageError when A, B are not positive or the alpha bounds are empty.
  void validate() const;
};

/// Modulation alpha(T, H, t_day). Implementations must be pure.
using AlphaFunction = std::function<double(double temperature, double humidity, double t_day)>;

AlphaFunction constant_alpha(double value);
/// amplitude * sin(2 pi t / period), independent of climate.
AlphaFunction sinusoidal_alpha(double amplitude, double period_days);

/// Daily (T, H) samples at t = 0, 1, 2, ... days with linear interpolation.
struct Climate {
  std::vector<double> temperature;
  std::vector<double> humidity;

  static Climate constant(double temperature, double humidity, std::size_t days);

  std::size_t size() const { return temperature.size(); }
  double last_day() const { return static_cast<double>(size()) - 1.0; }
  /// Throws DataError when t lies outside the sampled span.
  std::pair<double, double> at(double t_day) const;
};

/// Closed-form solution K / (1 + (K - x0)/x0 * exp(-A t)). Throws
/// std::domain_error for x0 <= 0 or t < 0.
double logistic_closed_form(const LogisticParams& params, double x0, double t);

double rhs(const LogisticParams& params, const AlphaFunction& alpha, double x, double temperature, double humidity,
           double t);

struct Rk4Options {
  double step = 0.01;  // days
};

struct Trajectory {
  std::vector<double> t;
  std::vector<double> x;
  int clip_count = 0;  // substeps where a negative state was clipped to zero
};

/// Classical RK4 on fixed substeps (at most `step`, shortened to land on
/// every grid point). Climate is interpolated linearly between daily samples.
/// Throws std::invalid_argument for a non-increasing grid, DataError when
/// climate does not cover the grid and NumericalError on blow-up.
Trajectory integrate_rk4(const LogisticParams& params, const AlphaFunction& alpha, double x0, const Climate& climate,
                         std::span<const double> t_grid, const Rk4Options& options = {});

/// Fraction of samples whose alpha sign agrees with the facilitation rule:
/// alpha >= 0 when (T - T*)^2 <= m1 and (H - H*)^2 <= m2, alpha < 0 otherwise.
struct SignDiagnostic {
  int n = 0;
  int agree = 0;
  double fraction() const { return n ? static_cast<double>(agree) / n : 0.0; }
  std::string report() const;
};

SignDiagnostic sign_diagnostic(const LogisticParams& params, std::span<const double> alpha,
                               std::span<const double> temperature, std::span<const double> humidity, double m1,
                               double m2);

/// `t_day,population`.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);

/// Integer day grid 0, 1, ..., n - 1.
std::vector<double> day_grid(std::size_t n);

}  // namespace pcmnn
