#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pcmnn/dynamics.hpp"
#include "pcmnn/evaluate.hpp"
#include "pcmnn/ingest.hpp"
#include "pcmnn/pinn.hpp"

namespace pcmnn::synth {

/// A ground-truth world: parameters, analytic alpha, climate, noise.
struct Scenario {
  LogisticParams params;
  std::string alpha_kind = "sine";  // sine | constant
  double alpha_amplitude = 0.3;
  double alpha_period = 30.0;
  double alpha_value = 0.0;
  std::string climate_kind = "constant";  // constant | sine | file
  double temp_c = 21.0;
  double rh_pct = 84.0;
  double temp_amplitude = 0.0;
  double rh_amplitude = 0.0;
  double climate_period = 30.0;
  std::string climate_file;
  double x0 = 2.0;
  double noise_sd = 2.0;
  std::uint64_t seed = 42;
  int days = ingest::kWindowDays;
  int year = 2021;
  double rk4_step = 0.01;

  /// Default model parameters, sinusoidal alpha of amplitude 0.3, climate held at
  /// the optima, x0 = 2, noise sd 2, seed 42.
  static Scenario benchmark();

  AlphaFunction alpha_true() const;
  Climate climate() const;
  /// Throws UsageError when the scenario is inconsistent.
  void validate() const;
};

/// Parses `key=value` lines with `#` comments. Unknown keys throw UsageError.
Scenario parse_scenario(const std::string& text);
Scenario read_scenario(const std::filesystem::path& path);
std::string scenario_text(const Scenario& scenario);

struct GroundTruth {
  std::vector<double> t_day;
  std::vector<double> x_true;
  std::vector<double> alpha_true;
  Climate climate;
};

struct Dataset {
  ingest::CompositeSeries observations;
  GroundTruth truth;
};

/// x_true from RK4 under alpha_true; observations = max(0, x_true + noise).
Dataset generate(const Scenario& scenario);

struct RecoveryReport {
  double alpha_rmse = 0.0;
  MetricsReport fit;       // x^NN against x_true
  MetricsReport forecast;  // RK4 with alpha^NN from the first observation, against x_true
};

/// Throws DataError when the truth grid leaves the trained window.
RecoveryReport score_recovery(const TrainState& trained, const GroundTruth& truth, double x0_observed);

/// Root-mean-square difference; throws DataError on a length mismatch.
double rmse(const std::vector<double>& a, const std::vector<double>& b);

/// Observations in the daily input schema (male_count = round(population / 2)).
std::vector<ingest::DailyRecord> to_records(const Dataset& dataset, int year);
/// `day_index,t_day,x_true,alpha_true,x_obs`.
void write_ground_truth_csv(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace pcmnn::synth
