#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcmnn/dynamics.hpp"
#include "pcmnn/ingest.hpp"

namespace pcmnn {

struct PrefitOptions {
  int day_start = 0;   // inclusive day_index
  int day_end = 21;    // inclusive day_index
  bool fix_x0 = false; // hold x0 at the first observation
  int max_iterations = 500;
  double initial_damping = 1e-3;
  double tolerance = 1e-10;  // relative sse improvement
  int extra_starts = 0;      // seeded random starts added to the grid
  std::uint64_t seed = 0;
};

struct PrefitResult {
  double A_hat = 0.0;
  double B_hat = 0.0;
  double x0_hat = 0.0;
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;
  bool ill_conditioned = false;
  int n_points = 0;
  int day_start = 0;
  std::vector<double> start_sse;  // sse at each multi-start initial point
  std::string message;

  double carrying_capacity() const { return A_hat / B_hat; }
  /// Multi-line `key=value` block.
  std::string to_text() const;
};

/// Least-squares fit of the closed-form logistic to the population on
/// [day_start, day_end], with time measured from day_start. Levenberg-Marquardt
/// with Marquardt scaling from a grid of starts; returns the best.
/// Throws DataError when the range holds fewer than four points.
PrefitResult fit_logistic(const ingest::CompositeSeries& series, const PrefitOptions& options = {});

/// Same fit on bare (t, x) samples.
PrefitResult fit_logistic(const std::vector<double>& t, const std::vector<double>& x, const PrefitOptions& options);

/// Sum of squared residuals of the closed form at (A, B, x0).
double logistic_sse(const std::vector<double>& t, const std::vector<double>& x, double A, double B, double x0);

/// `A_hat,B_hat,K_hat,x0_hat,sse,iterations,converged,ill_conditioned` header and row.
std::vector<std::string> prefit_csv_header();
std::vector<std::string> prefit_csv_row(const PrefitResult& result);

/// `t_day,x_obs,x_fit` over the whole series.
void write_prefit_curve_csv(const std::filesystem::path& path, const ingest::CompositeSeries& series,
                            const PrefitResult& result);

}  // namespace pcmnn
