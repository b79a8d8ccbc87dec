#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcmnn/adam.hpp"
#include "pcmnn/dynamics.hpp"
#include "pcmnn/ingest.hpp"
#include "pcmnn/network.hpp"
#include "pcmnn/random.hpp"

namespace pcmnn {

struct TrainConfig {
  int n_data = 0;     // leading days used as observations; 0 = whole series
  int n_colloc = 100;
  double lambda_data = 1.0;
  double lambda_ode = 1.0;
  int iterations = 10000;
  std::uint64_t seed = 42;
  bool colloc_resample = true;  // false: draw one fixed set up front
  double learning_rate = 1e-3;
  double final_learning_rate = 1e-3;  // geometric decay target; equal to learning_rate disables decay
  std::vector<int> state_hidden = {32, 32, 32, 32, 32};
  std::vector<int> alpha_hidden = {64, 64, 64};

  /// Throws UsageError on an invalid combination.
  void validate() const;
  /// Learning rate used at a 0-based iteration.
  double learning_rate_at(int iteration) const;
};

struct LossRecord {
  double data = 0.0;
  double ode = 0.0;
  double total = 0.0;
};

/// Everything needed to resume, evaluate or reproduce a training run.
struct TrainState {
  TrainConfig config;
  LogisticParams params;
  ingest::NormalizationSpec norm;
  MlpNetwork state_net;  // unit time -> population
  MlpNetwork alpha_net;  // (temp feature, humidity feature, unit time) -> alpha
  AdamState adam;
  std::vector<LossRecord> loss_history;
  std::uint64_t seed = 0;
  std::int64_t iteration = 0;
  double colloc_upper = 1.0;  // collocation domain is [0, colloc_upper] in unit time
  std::vector<std::string> warnings;

  /// x^NN at a day.
  double population_at(double t_day) const;
  /// alpha^NN at a day under the given climate reading.
  double alpha_at(double temperature, double humidity, double t_day) const;
  /// The trained modulation as a pure function for the integrator.
  AlphaFunction alpha_function() const;
};

/// Fresh networks and optimizer for a series. The state network output is
/// scaled by the largest observation; the modulation network output is
/// squashed into [alpha_min, alpha_max].
TrainState initialize(const ingest::CompositeSeries& series, const LogisticParams& params, const TrainConfig& config,
                      const ingest::NormalizationSpec& norm = {});

/// Mean squared misfit of x^NN against the observed population.
double loss_data(const MlpNetwork& state_net, const ingest::NormalizedSeries& series);

/// Mean squared residual of the modulated logistic at unit-time collocation
/// points. Throws NumericalError naming the first non-finite point.
double loss_ode(const MlpNetwork& state_net, const MlpNetwork& alpha_net, const LogisticParams& params,
                const Climate& climate, const ingest::NormalizationSpec& norm, const std::vector<double>& colloc_points);

/// Uniform draws on [0, upper].
std::vector<double> sample_collocation(int n_colloc, Rng& rng, double upper = 1.0);

struct LossGradient {
  LossRecord loss;
  std::vector<double> grad;  // state_net parameters, then alpha_net parameters
};

/// Weighted total loss and its exact gradient over both networks.
LossGradient loss_and_gradient(const TrainState& state, const ingest::NormalizedSeries& observations,
                               const Climate& climate, const std::vector<double>& colloc_points);

using ProgressFn = std::function<void(std::int64_t iteration, const LossRecord& loss)>;

/// Runs config.iterations Adam steps on lambda_data * loss_data + lambda_ode * loss_ode.
/// Throws NumericalError on a non-finite loss with iteration and component.
TrainState train(const ingest::CompositeSeries& series, const LogisticParams& params, const TrainConfig& config,
                 const ProgressFn& progress = {}, const ingest::NormalizationSpec& norm = {});

/// Continues an initialized state for `steps` iterations.
void train_steps(TrainState& state, const ingest::CompositeSeries& series, std::int64_t steps,
                 const ProgressFn& progress = {});

struct AlphaSeries {
  std::vector<double> t_day;
  std::vector<double> alpha;
  double growth_threshold = 0.0;  // alpha = 0
  double baseline = 0.0;          // alpha = -A
};

/// alpha^NN on a day grid; throws DataError for days outside the window.
AlphaSeries extract_alpha(const TrainState& state, const Climate& climate, const std::vector<double>& grid);

/// Climate of a composite series as daily samples.
Climate climate_of(const ingest::CompositeSeries& series);

void write_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(std::ostream& out, const TrainState& state);
TrainState read_checkpoint(std::istream& in);

/// `t_day,x_obs,x_fit`.
void write_fit_csv(const std::filesystem::path& path, const TrainState& state, const ingest::CompositeSeries& series);
/// `t_day,alpha_hat`.
void write_alpha_csv(const std::filesystem::path& path, const AlphaSeries& alpha);
/// `iteration,loss_data,loss_ode,total`.
void write_loss_history_csv(const std::filesystem::path& path, const TrainState& state);

}  // namespace pcmnn
