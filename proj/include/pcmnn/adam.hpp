#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pcmnn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;

  AdamState() = default;
  AdamState(std::size_t n_params, AdamConfig cfg)
      : config(cfg), first_moment(n_params, 0.0), second_moment(n_params, 0.0) {}
};

/// One bias-corrected Adam update in place. `learning_rate` overrides the
/// configured rate when positive (used by schedules).
///
/// Throws std::invalid_argument on a shape mismatch and NumericalError on a
/// non-finite gradient, naming `source` and the first offending index.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::string_view source = "gradient", double learning_rate = -1.0);

}  // namespace pcmnn
