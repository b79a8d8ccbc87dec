#include "pcmnn/network.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "pcmnn/csv.hpp"
#include "pcmnn/error.hpp"

namespace pcmnn {

namespace {

void check_layers(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("network needs at least input and output layers");
  for (int s : sizes) {
    if (s <= 0) throw std::invalid_argument("layer widths must be positive");
  }
  if (sizes.back() != 1) throw std::invalid_argument("network output must be scalar");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double OutputMap::apply(double raw) const {
  if (kind == Kind::Affine) return a * raw + b;
  return a + (b - a) * sigmoid(raw);
}

MlpNetwork MlpNetwork::zeros(std::vector<int> layer_sizes, OutputMap output_map) {
  check_layers(layer_sizes);
  if (output_map.kind == OutputMap::Kind::Bounded && !(output_map.a < output_map.b)) {
    throw std::invalid_argument("bounded output map needs lo < hi");
  }
  MlpNetwork net;
  net.layer_sizes = std::move(layer_sizes);
  net.output_map = output_map;
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    net.weights.push_back(ad::Matrix::Zero(net.layer_sizes[l], net.layer_sizes[l + 1]));
    net.biases.push_back(ad::Matrix::Zero(1, net.layer_sizes[l + 1]));
  }
  return net;
}

MlpNetwork MlpNetwork::create(std::vector<int> layer_sizes, OutputMap output_map, Rng& rng) {
  MlpNetwork net = zeros(std::move(layer_sizes), output_map);
  for (auto& w : net.weights) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
    }
  }
  return net;
}

std::size_t MlpNetwork::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<double> MlpNetwork::flatten() const {
  std::vector<double> out;
  out.reserve(num_params());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) out.push_back(w(r, c));
    }
    for (Eigen::Index c = 0; c < biases[l].cols(); ++c) out.push_back(biases[l](0, c));
  }
  return out;
}

void MlpNetwork::unflatten(std::span<const double> params) {
  if (params.size() != num_params()) throw std::invalid_argument("unflatten: parameter count mismatch");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    auto& w = weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = params[k++];
    }
    for (Eigen::Index c = 0; c < biases[l].cols(); ++c) biases[l](0, c) = params[k++];
  }
}

Eigen::VectorXd MlpNetwork::evaluate_batch(const ad::Matrix& inputs) const {
  if (inputs.cols() != input_size()) throw std::invalid_argument("evaluate: input width mismatch");
  ad::Matrix h = inputs;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    ad::Matrix z = (h * weights[l]).rowwise() + biases[l].row(0);
    if (l + 1 < weights.size()) {
      h = z.array().tanh();
    } else {
      h = std::move(z);
    }
  }
  Eigen::VectorXd out(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) out(i) = output_map.apply(h(i, 0));
  return out;
}

double MlpNetwork::evaluate_raw(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_size()) throw std::invalid_argument("evaluate: input width mismatch");
  Eigen::RowVectorXd h = Eigen::Map<const Eigen::RowVectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::RowVectorXd z = h * weights[l] + biases[l].row(0);
    if (l + 1 < weights.size()) {
      h = z.array().tanh();
    } else {
      h = std::move(z);
    }
  }
  return h(0);
}

double MlpNetwork::evaluate(std::span<const double> input) const { return output_map.apply(evaluate_raw(input)); }

bool MlpNetwork::operator==(const MlpNetwork& other) const {
  if (layer_sizes != other.layer_sizes || !(output_map == other.output_map)) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
  }
  return true;
}

std::vector<double> BoundNetwork::grad() const {
  std::vector<double> out;
  out.reserve(net->num_params());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& gw = weights[l].grad();
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) out.push_back(gw(r, c));
    }
    const auto& gb = biases[l].grad();
    for (Eigen::Index c = 0; c < gb.cols(); ++c) out.push_back(gb(0, c));
  }
  return out;
}

BoundNetwork bind(ad::Tape& tape, const MlpNetwork& net) {
  BoundNetwork bound;
  bound.net = &net;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    bound.weights.push_back(tape.leaf(net.weights[l]));
    bound.biases.push_back(tape.leaf(net.biases[l]));
  }
  return bound;
}

namespace {

ad::Var apply_output(const OutputMap& map, ad::Var raw) {
  if (map.kind == OutputMap::Kind::Affine) return map.a * raw + map.b;
  return (map.b - map.a) * ad::sigmoid(raw) + map.a;
}

}  // namespace

ad::Var forward(const BoundNetwork& bound, ad::Var inputs) {
  if (inputs.cols() != bound.net->input_size()) {
    throw std::invalid_argument("forward: input width " + std::to_string(inputs.cols()) + ", network expects " +
                                std::to_string(bound.net->input_size()));
  }
  ad::Var h = inputs;
  const std::size_t n_layers = bound.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    ad::Var z = ad::add_row(ad::matmul(h, bound.weights[l]), bound.biases[l]);
    h = (l + 1 < n_layers) ? ad::tanh(z) : z;
  }
  return apply_output(bound.net->output_map, h);
}

TangentOutput forward_with_tangent(const BoundNetwork& bound, ad::Var inputs, const ad::Matrix& direction) {
  if (inputs.cols() != bound.net->input_size()) throw std::invalid_argument("forward: input width mismatch");
  if (direction.rows() != inputs.rows() || direction.cols() != inputs.cols()) {
    throw std::invalid_argument("forward: direction shape must match inputs");
  }
  ad::Tape& tape = *inputs.tape;
  ad::Var h = inputs;
  ad::Var d = tape.constant(direction);
  const std::size_t n_layers = bound.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    ad::Var z = ad::add_row(ad::matmul(h, bound.weights[l]), bound.biases[l]);
    ad::Var dz = ad::matmul(d, bound.weights[l]);
    if (l + 1 < n_layers) {
      h = ad::tanh(z);
      d = dz - ad::square(h) * dz;  // tanh' = 1 - tanh^2
    } else {
      h = z;
      d = dz;
    }
  }
  const OutputMap& map = bound.net->output_map;
  if (map.kind == OutputMap::Kind::Affine) return {map.a * h + map.b, map.a * d};
  ad::Var s = ad::sigmoid(h);
  ad::Var value = (map.b - map.a) * s + map.a;
  ad::Var tangent = (map.b - map.a) * ((s - ad::square(s)) * d);
  return {value, tangent};
}

NetworkEvaluation::NetworkEvaluation(const MlpNetwork& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_size()) {
    throw std::invalid_argument("forward: input length " + std::to_string(input.size()) + ", network expects " +
                                std::to_string(net.input_size()));
  }
  bound_ = bind(tape_, net);
  ad::Matrix x(1, static_cast<Eigen::Index>(input.size()));
  for (std::size_t i = 0; i < input.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = input[i];
  input_ = tape_.leaf(std::move(x));
  output_ = forward(bound_, input_);
}

void NetworkEvaluation::ensure_backward() {
  if (!tape_.has_backward()) tape_.backward(output_);
}

std::vector<double> NetworkEvaluation::grad_params() {
  ensure_backward();
  return bound_.grad();
}

double NetworkEvaluation::grad_input(std::size_t index) {
  if (index >= static_cast<std::size_t>(input_.cols())) throw std::out_of_range("grad_input: index out of range");
  ensure_backward();
  return input_.grad()(0, static_cast<Eigen::Index>(index));
}

void write_network(std::ostream& out, const MlpNetwork& net) {
  out << "pcmnn-network 1\n";
  out << "layers " << net.layer_sizes.size();
  for (int s : net.layer_sizes) out << ' ' << s;
  out << "\nactivation tanh\n";
  out << "output " << (net.output_map.kind == OutputMap::Kind::Affine ? "affine" : "bounded") << ' '
      << csv::format_hex(net.output_map.a) << ' ' << csv::format_hex(net.output_map.b) << '\n';
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    out << "W" << l;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) out << ' ' << csv::format_hex(w(r, c));
    }
    out << "\nb" << l;
    for (Eigen::Index c = 0; c < net.biases[l].cols(); ++c) out << ' ' << csv::format_hex(net.biases[l](0, c));
    out << '\n';
  }
  out << "end-network\n";
}

MlpNetwork read_network(std::istream& in) {
  auto expect = [&in](const std::string& word) {
    std::string token;
    if (!(in >> token) || token != word) {
      throw DataError("network checkpoint: expected '" + word + "', got '" + token + "'");
    }
  };
  auto next_hex = [&in]() {
    std::string token;
    if (!(in >> token)) throw DataError("network checkpoint: truncated");
    return csv::parse_hex(token, "network checkpoint");
  };
  expect("pcmnn-network");
  int version = 0;
  in >> version;
  if (version != 1) throw DataError("network checkpoint: unsupported version " + std::to_string(version));
  expect("layers");
  std::size_t n_layers = 0;
  in >> n_layers;
  std::vector<int> sizes(n_layers);
  for (auto& s : sizes) in >> s;
  if (!in) throw DataError("network checkpoint: bad layer list");
  expect("activation");
  expect("tanh");
  expect("output");
  std::string kind;
  in >> kind;
  const double a = next_hex();
  const double b = next_hex();
  OutputMap map;
  if (kind == "affine") {
    map = OutputMap::affine(a, b);
  } else if (kind == "bounded") {
    map = OutputMap::bounded(a, b);
  } else {
    throw DataError("network checkpoint: unknown output map '" + kind + "'");
  }
  MlpNetwork net;
  try {
    net = MlpNetwork::zeros(sizes, map);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("network checkpoint: ") + e.what());
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    expect("W" + std::to_string(l));
    auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = next_hex();
    }
    expect("b" + std::to_string(l));
    for (Eigen::Index c = 0; c < net.biases[l].cols(); ++c) net.biases[l](0, c) = next_hex();
  }
  expect("end-network");
  return net;
}

}  // namespace pcmnn
