#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "pcmnn/autodiff.hpp"
#include "pcmnn/random.hpp"

namespace pcmnn {

/// Map applied to the last affine layer.
struct OutputMap {
  enum class Kind { Affine, Bounded };
  Kind kind = Kind::Affine;
  // Affine: y = scale * raw + offset. Bounded: y = lo + (hi - lo) * sigmoid(raw).
  double a = 1.0;
  double b = 0.0;

  static OutputMap identity() { return {}; }
  static OutputMap affine(double scale, double offset = 0.0) { return {Kind::Affine, scale, offset}; }
  static OutputMap bounded(double lo, double hi) { return {Kind::Bounded, lo, hi}; }

  double apply(double raw) const;
  bool operator==(const OutputMap&) const = default;
};

/// Fully connected scalar-output network with tanh hidden layers.
///
/// Weights are stored as (fan_in x fan_out) so a batch of row inputs maps as
/// `H * W + b`.
struct MlpNetwork {
  std::vector<int> layer_sizes;
  std::vector<ad::Matrix> weights;
  std::vector<ad::Matrix> biases;  // 1 x fan_out
  OutputMap output_map;

  /// Glorot-uniform weights, zero biases. Throws std::invalid_argument for
  /// fewer than two layers, non-positive widths or a non-scalar output.
  static MlpNetwork create(std::vector<int> layer_sizes, OutputMap output_map, Rng& rng);

  /// A network whose parameters are all zero.
  static MlpNetwork zeros(std::vector<int> layer_sizes, OutputMap output_map);

  int input_size() const { return layer_sizes.front(); }
  std::size_t num_params() const;
  /// Parameters in layer order: W0 row-major, b0, W1, b1, ...
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> params);

  /// Plain evaluation without a tape.
  double evaluate(std::span<const double> input) const;
  /// Row-wise batch evaluation; returns one value per row.
  Eigen::VectorXd evaluate_batch(const ad::Matrix& inputs) const;
  /// Output before the output map (the pre-squash value).
  double evaluate_raw(std::span<const double> input) const;

  bool operator==(const MlpNetwork&) const;
};

/// Leaves holding a network's parameters on a tape.
struct BoundNetwork {
  const MlpNetwork* net = nullptr;
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;

  /// Parameter gradients after a backward pass, in flatten() order.
  std::vector<double> grad() const;
};

BoundNetwork bind(ad::Tape& tape, const MlpNetwork& net);

/// Batch forward: inputs (n x in) to outputs (n x 1), output map applied.
ad::Var forward(const BoundNetwork& bound, ad::Var inputs);

struct TangentOutput {
  ad::Var value;    // n x 1
  ad::Var tangent;  // n x 1, derivative of value along the input direction
};

/// Forward pass that also carries the directional derivative of the output
/// along `direction` (n x in) through every layer. Both results are tape
/// nodes, so a later backward pass differentiates the derivative itself
/// with respect to the parameters.
TangentOutput forward_with_tangent(const BoundNetwork& bound, ad::Var inputs, const ad::Matrix& direction);

/// Single-input evaluation with its own tape; supports parameter and input
/// gradients of the scalar output.
class NetworkEvaluation {
 public:
  NetworkEvaluation(const MlpNetwork& net, std::span<const double> input);

  double value() const { return output_.scalar(); }
  /// d output / d parameters, in flatten() order.
  std::vector<double> grad_params();
  /// d output / d input[index]; throws std::out_of_range for a bad index.
  double grad_input(std::size_t index);

 private:
  void ensure_backward();

  ad::Tape tape_;
  BoundNetwork bound_;
  ad::Var input_;
  ad::Var output_;
};

/// Text checkpoint with exact hex-float values; see README for the layout.
void write_network(std::ostream& out, const MlpNetwork& net);
MlpNetwork read_network(std::istream& in);

}  // namespace pcmnn
