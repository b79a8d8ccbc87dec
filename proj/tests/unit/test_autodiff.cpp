#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pcmnn/autodiff.hpp"
#include "pcmnn/network.hpp"
#include "pcmnn/random.hpp"
#include "test_support.hpp"

using namespace pcmnn;
using ad::Matrix;

namespace {

MlpNetwork random_net(Rng& rng, OutputMap map = OutputMap::identity()) {
  const int in = 1 + static_cast<int>(rng.uniform() * 3.0);
  const int hidden_layers = 1 + static_cast<int>(rng.uniform() * 2.0);
  std::vector<int> sizes{in};
  for (int l = 0; l < hidden_layers; ++l) sizes.push_back(1 + static_cast<int>(rng.uniform() * 8.0));
  sizes.push_back(1);
  auto net = MlpNetwork::create(sizes, map, rng);
  for (auto& b : net.biases)
    for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = rng.uniform(-0.5, 0.5);
  return net;
}

double tangent_value(const MlpNetwork& net, const std::vector<double>& x, const std::vector<double>& dir) {
  ad::Tape tape;
  auto bound = bind(tape, net);
  Matrix in(1, x.size()), d(1, x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    in(0, i) = x[i];
    d(0, i) = dir[i];
  }
  return forward_with_tangent(bound, tape.constant(in), d).tangent.value()(0, 0);
}

}  // namespace

TEST_CASE("hand-computed tanh network") {
  auto net = MlpNetwork::zeros({2, 2, 1}, OutputMap::identity());
  net.weights[0] << 0.3, -0.2, 0.1, 0.4;
  net.biases[0] << 0.05, -0.1;
  net.weights[1] << 0.7, -0.5;
  net.biases[1] << 0.2;
  const std::vector<double> x{0.5, -1.0};
  CHECK(net.evaluate(x) == doctest::Approx(0.5382923797364867).epsilon(1e-15));
  NetworkEvaluation ev(net, x);
  CHECK(ev.value() == doctest::Approx(0.5382923797364867).epsilon(1e-15));
}

TEST_CASE("elementwise ops match closed-form derivatives") {
  ad::Tape tape;
  Matrix a0(2, 2);
  a0 << 0.3, -1.2, 0.7, 2.0;
  Matrix b0(2, 2);
  b0 << 1.5, 0.4, -0.6, 0.9;
  auto a = tape.leaf(a0);
  auto b = tape.leaf(b0);
  auto y = sum(square(a) * b + ad::tanh(a) - ad::sigmoid(b) + 3.0 * a + (-b) + 1.0);
  tape.backward(y);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double av = a0(i), bv = b0(i);
    const double s = 1.0 / (1.0 + std::exp(-bv));
    CHECK(a.grad()(i) == doctest::Approx(2 * av * bv + (1 - std::tanh(av) * std::tanh(av)) + 3.0));
    CHECK(b.grad()(i) == doctest::Approx(av * av - s * (1 - s) - 1.0));
  }
}

TEST_CASE("matmul, add_row, column and mean gradients") {
  ad::Tape tape;
  Matrix x0 = Matrix::Random(3, 2), w0 = Matrix::Random(2, 4), r0 = Matrix::Random(1, 4);
  auto x = tape.leaf(x0);
  auto w = tape.leaf(w0);
  auto r = tape.leaf(r0);
  auto y = mean(column(add_row(matmul(x, w), r), 2));
  tape.backward(y);
  // d/dW[k,2] = mean over rows of x[:,k]; other columns are zero.
  for (int k = 0; k < 2; ++k) {
    CHECK(w.grad()(k, 2) == doctest::Approx(x0.col(k).mean()));
    CHECK(w.grad()(k, 0) == 0.0);
  }
  CHECK(r.grad()(0, 2) == doctest::Approx(1.0));
  CHECK(r.grad()(0, 1) == 0.0);
  for (int i = 0; i < 3; ++i) CHECK(x.grad()(i, 1) == doctest::Approx(w0(1, 2) / 3.0));
}

TEST_CASE("shape mismatches and misuse are rejected") {
  ad::Tape tape;
  auto a = tape.leaf(Matrix::Ones(2, 2));
  auto b = tape.leaf(Matrix::Ones(3, 2));
  CHECK_THROWS_AS(a + b, std::invalid_argument);
  CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(tape.backward(a), std::invalid_argument);
  CHECK_THROWS_AS(tape.grad(a.id), std::logic_error);
  auto c = tape.constant(Matrix::Ones(2, 2));
  auto y = sum(a * c);
  tape.backward(y);
  CHECK(c.grad().isZero());
  CHECK(a.grad().isOnes());
}

TEST_CASE("a shared subexpression accumulates gradients from both uses") {
  ad::Tape tape;
  auto x = tape.leaf(Matrix::Constant(1, 1, 1.5));
  auto t = ad::tanh(x);
  auto y = sum(t * t + t);
  tape.backward(y);
  const double th = std::tanh(1.5);
  CHECK(x.grad()(0, 0) == doctest::Approx((2 * th + 1) * (1 - th * th)));
}

TEST_CASE("100 random networks: parameter and input gradients match central differences") {
  Rng rng(2024);
  const double h = 1e-4;
  for (int trial = 0; trial < 100; ++trial) {
    auto net = random_net(rng, trial % 2 ? OutputMap::identity() : OutputMap::bounded(-1.372, 0.628));
    std::vector<double> x(net.input_size());
    for (double& v : x) v = rng.uniform(-1.0, 1.0);

    NetworkEvaluation ev(net, x);
    const auto g = ev.grad_params();
    const auto theta = net.flatten();
    std::vector<double> fd(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      fd[i] = test::central_difference(
          [&](const std::vector<double>& p) {
            MlpNetwork m = net;
            m.unflatten(p);
            return m.evaluate(x);
          },
          theta, i, h);
    }
    CHECK(test::relative_error(g, fd) < 1e-5);

    std::vector<double> gx(x.size()), fdx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      gx[i] = ev.grad_input(i);
      fdx[i] = test::central_difference([&](const std::vector<double>& v) { return net.evaluate(v); }, x, i, h);
    }
    CHECK(test::relative_error(gx, fdx) < 1e-5);
  }
}

TEST_CASE("tangent propagation gives the input derivative and its parameter gradient") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    auto net = random_net(rng, trial % 2 ? OutputMap::affine(3.0, 0.5) : OutputMap::bounded(-1.0, 2.0));
    std::vector<double> x(net.input_size()), dir(net.input_size(), 0.0);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    dir.back() = 1.0;

    const double fd_dx =
        test::central_difference([&](const std::vector<double>& v) { return net.evaluate(v); }, x, x.size() - 1, 1e-5);
    CHECK(tangent_value(net, x, dir) == doctest::Approx(fd_dx).epsilon(1e-7));

    ad::Tape tape;
    auto bound = bind(tape, net);
    Matrix in(1, x.size()), d(1, x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      in(0, i) = x[i];
      d(0, i) = dir[i];
    }
    auto out = forward_with_tangent(bound, tape.constant(in), d);
    CHECK(out.value.value()(0, 0) == doctest::Approx(net.evaluate(x)).epsilon(1e-14));
    tape.backward(sum(out.tangent));
    const auto g = bound.grad();
    const auto theta = net.flatten();
    std::vector<double> fd(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      fd[i] = test::central_difference(
          [&](const std::vector<double>& p) {
            MlpNetwork m = net;
            m.unflatten(p);
            return tangent_value(m, x, dir);
          },
          theta, i, 1e-5);
    }
    CHECK(test::relative_error(g, fd) < 1e-6);
  }
}

TEST_CASE("bounded output stays inside its interval") {
  Rng rng(5);
  auto net = MlpNetwork::create({3, 16, 16, 1}, OutputMap::bounded(-1.372, 0.628), rng);
  for (auto& w : net.weights) w *= 40.0;
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> x{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const double y = net.evaluate(x);
    CHECK(y >= -1.372);
    CHECK(y <= 0.628);
  }
}

TEST_CASE("flatten and unflatten are inverse; network text round trip is exact") {
  Rng rng(11);
  auto net = MlpNetwork::create({3, 5, 4, 1}, OutputMap::bounded(-1.372, 0.628), rng);
  auto theta = net.flatten();
  CHECK(theta.size() == net.num_params());
  CHECK(net.num_params() == 3 * 5 + 5 + 5 * 4 + 4 + 4 + 1);
  MlpNetwork other = MlpNetwork::zeros(net.layer_sizes, net.output_map);
  other.unflatten(theta);
  CHECK(other == net);
  CHECK_THROWS(other.unflatten(std::vector<double>(3)));

  std::stringstream buf;
  write_network(buf, net);
  auto back = read_network(buf);
  CHECK(back == net);
  CHECK(back.flatten() == theta);

  std::stringstream broken("pcmnn-network 1\nlayers 2 1\n");
  CHECK_THROWS(read_network(broken));
}

TEST_CASE("grad_input rejects a bad index") {
  Rng rng(3);
  auto net = MlpNetwork::create({2, 3, 1}, OutputMap::identity(), rng);
  NetworkEvaluation ev(net, std::vector<double>{0.1, 0.2});
  CHECK_THROWS_AS(ev.grad_input(2), std::out_of_range);
}

TEST_CASE("Glorot initialization is seed deterministic and bounded") {
  Rng a(42), b(42), c(43);
  auto na = MlpNetwork::create({3, 64, 1}, OutputMap::identity(), a);
  auto nb = MlpNetwork::create({3, 64, 1}, OutputMap::identity(), b);
  auto nc = MlpNetwork::create({3, 64, 1}, OutputMap::identity(), c);
  CHECK(na == nb);
  CHECK_FALSE(na == nc);
  const double limit = std::sqrt(6.0 / (3 + 64));
  CHECK(na.weights[0].cwiseAbs().maxCoeff() <= limit);
  CHECK(na.biases[0].isZero());
}
