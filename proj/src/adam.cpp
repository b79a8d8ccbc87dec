#include "pcmnn/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pcmnn/error.hpp"

namespace pcmnn {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, std::string_view source,
               double learning_rate) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment sizes disagree");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericalError("non-finite gradient from " + std::string(source) + " at parameter " + std::to_string(i));
    }
  }
  const AdamConfig& cfg = state.config;
  const double lr = learning_rate > 0.0 ? learning_rate : cfg.learning_rate;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads[i];
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grads[i] * grads[i];
    params[i] -= lr * (m / correction1) / (std::sqrt(v / correction2) + cfg.epsilon);
  }
}

}  // namespace pcmnn
