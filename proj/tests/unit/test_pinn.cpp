#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pcmnn/dynamics.hpp"
#include "pcmnn/error.hpp"
#include "pcmnn/pinn.hpp"
#include "pcmnn/random.hpp"
#include "test_support.hpp"

using namespace pcmnn;

namespace {

ingest::CompositeSeries logistic_series(double x0, int days = 30) {
  LogisticParams p;
  ingest::CompositeSeries s;
  for (int d = 0; d < days; ++d) {
    s.day_index.push_back(d);
    s.population.push_back(logistic_closed_form(p, x0, d));
    s.temperature.push_back(21.0 + 0.2 * d);
    s.humidity.push_back(84.0 - 0.3 * d);
  }
  s.n_years = 1;
  return s;
}

TrainConfig small_config() {
  TrainConfig c;
  c.state_hidden = {6, 6};
  c.alpha_hidden = {5};
  c.n_colloc = 16;
  c.iterations = 20;
  c.seed = 7;
  return c;
}

// x(t) = K/2 + K/2 tanh((A t_day - ln c) / 2) is the unmodulated logistic.
MlpNetwork exact_logistic_net(const LogisticParams& p, double x0, double t_span) {
  const double K = p.carrying_capacity();
  const double c = (K - x0) / x0;
  auto net = MlpNetwork::zeros({1, 1, 1}, OutputMap::identity());
  net.weights[0](0, 0) = p.A * t_span / 2.0;
  net.biases[0](0, 0) = -std::log(c) / 2.0;
  net.weights[1](0, 0) = K / 2.0;
  net.biases[1](0, 0) = K / 2.0;
  return net;
}

// Bounded net whose output is identically zero.
MlpNetwork zero_alpha_net(const LogisticParams& p) {
  auto net = MlpNetwork::zeros({3, 2, 1}, OutputMap::bounded(p.alpha_min, p.alpha_max));
  const double u = (0.0 - p.alpha_min) / (p.alpha_max - p.alpha_min);
  net.biases[1](0, 0) = std::log(u / (1.0 - u));
  return net;
}

}  // namespace

TEST_CASE("training configuration validation") {
  TrainConfig c;
  CHECK(c.iterations == 10000);
  CHECK(c.state_hidden == std::vector<int>(5, 32));
  CHECK(c.alpha_hidden == std::vector<int>(3, 64));
  CHECK(c.n_colloc == 100);
  CHECK(c.learning_rate_at(0) == c.learning_rate);
  CHECK(c.learning_rate_at(5000) == c.learning_rate);
  c.final_learning_rate = 1e-4;
  CHECK(c.learning_rate_at(0) == doctest::Approx(1e-3));
  CHECK(c.learning_rate_at(c.iterations - 1) == doctest::Approx(1e-4));
  c.n_colloc = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  TrainConfig neg;
  neg.lambda_ode = -1.0;
  CHECK_THROWS_AS(neg.validate(), UsageError);
  TrainConfig empty;
  empty.state_hidden = {};
  CHECK_THROWS_AS(empty.validate(), UsageError);
}

TEST_CASE("exact logistic network with zero modulation has zero losses") {
  LogisticParams p;
  auto series = logistic_series(2.0);
  auto state = initialize(series, p, small_config());
  state.state_net = exact_logistic_net(p, 2.0, state.norm.t_span);
  state.alpha_net = zero_alpha_net(p);

  CHECK(state.alpha_at(30.0, 60.0, 12.0) == doctest::Approx(0.0).epsilon(1e-12));
  for (int d : {0, 7, 21, 29})
    CHECK(state.population_at(d) == doctest::Approx(logistic_closed_form(p, 2.0, d)).epsilon(1e-10));

  const auto obs = ingest::normalize(series, state.norm);
  CHECK(loss_data(state.state_net, obs) < 1e-18);
  Rng rng(1);
  const auto colloc = sample_collocation(200, rng);
  CHECK(loss_ode(state.state_net, state.alpha_net, p, climate_of(series), state.norm, colloc) < 1e-18);

  auto lg = loss_and_gradient(state, obs, climate_of(series), colloc);
  CHECK(lg.loss.total < 1e-18);
  double g = 0.0;
  for (double v : lg.grad) g = std::max(g, std::abs(v));
  CHECK(g < 1e-6);
}

TEST_CASE("loss gradient matches central differences") {
  LogisticParams p;
  auto series = logistic_series(5.0);
  auto cfg = small_config();
  cfg.lambda_data = 0.7;
  cfg.lambda_ode = 1.3;
  auto state = initialize(series, p, cfg);
  const auto obs = ingest::normalize(series, state.norm);
  const auto climate = climate_of(series);
  Rng rng(3);
  const auto colloc = sample_collocation(12, rng);

  const auto lg = loss_and_gradient(state, obs, climate, colloc);
  const std::size_t n_state = state.state_net.num_params();
  std::vector<double> theta = state.state_net.flatten();
  const auto a = state.alpha_net.flatten();
  theta.insert(theta.end(), a.begin(), a.end());
  REQUIRE(lg.grad.size() == theta.size());

  auto total = [&](const std::vector<double>& v) {
    TrainState s = state;
    s.state_net.unflatten(std::span<const double>(v).first(n_state));
    s.alpha_net.unflatten(std::span<const double>(v).subspan(n_state));
    return cfg.lambda_data * loss_data(s.state_net, obs) +
           cfg.lambda_ode * loss_ode(s.state_net, s.alpha_net, p, climate, s.norm, colloc);
  };
  CHECK(total(theta) == doctest::Approx(lg.loss.total).epsilon(1e-12));
  std::vector<double> fd(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) fd[i] = test::central_difference(total, theta, i, 1e-6);
  CHECK(test::relative_error(lg.grad, fd) < 1e-4);
}

TEST_CASE("collocation draws are uniform on the requested interval") {
  Rng rng(9);
  auto pts = sample_collocation(5000, rng, 0.5);
  double mean = 0.0;
  for (double t : pts) {
    CHECK(t >= 0.0);
    CHECK(t <= 0.5);
    mean += t / pts.size();
  }
  CHECK(mean == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("training is deterministic and reduces the loss") {
  auto series = logistic_series(2.0);
  auto cfg = small_config();
  cfg.iterations = 200;
  cfg.learning_rate = cfg.final_learning_rate = 1e-2;
  auto a = train(series, LogisticParams{}, cfg);
  auto b = train(series, LogisticParams{}, cfg);
  REQUIRE(a.loss_history.size() == 200);
  for (std::size_t i = 0; i < a.loss_history.size(); ++i) {
    CHECK(a.loss_history[i].total == b.loss_history[i].total);
  }
  CHECK(a.state_net == b.state_net);
  CHECK(a.alpha_net == b.alpha_net);
  CHECK(a.loss_history.back().total < a.loss_history.front().total);
  CHECK(a.iteration == 200);

  cfg.seed = 8;
  auto c = train(series, LogisticParams{}, cfg);
  CHECK_FALSE(c.state_net == a.state_net);
}

TEST_CASE("resuming from a checkpoint equals an uninterrupted run") {
  auto series = logistic_series(2.0);
  auto cfg = small_config();
  cfg.iterations = 30;
  auto straight = train(series, LogisticParams{}, cfg);

  auto partial = initialize(series, LogisticParams{}, cfg);
  train_steps(partial, series, 12);
  std::stringstream buf;
  write_checkpoint(buf, partial);
  auto resumed = read_checkpoint(buf);
  train_steps(resumed, series, 18);

  CHECK(resumed.iteration == 30);
  CHECK(resumed.state_net == straight.state_net);
  CHECK(resumed.alpha_net == straight.alpha_net);
  REQUIRE(resumed.loss_history.size() == straight.loss_history.size());
  CHECK(resumed.loss_history.back().total == straight.loss_history.back().total);
}

TEST_CASE("checkpoint round trip is bit exact") {
  auto series = logistic_series(2.0);
  auto cfg = small_config();
  cfg.final_learning_rate = 1e-4;
  cfg.colloc_resample = false;
  auto state = train(series, LogisticParams{}, cfg);
  auto dir = test::scratch_dir("pinn_checkpoint");
  write_checkpoint(dir / "ck.txt", state);
  auto back = read_checkpoint(dir / "ck.txt");
  CHECK(back.state_net == state.state_net);
  CHECK(back.alpha_net == state.alpha_net);
  CHECK(back.adam.first_moment == state.adam.first_moment);
  CHECK(back.adam.second_moment == state.adam.second_moment);
  CHECK(back.adam.step_count == state.adam.step_count);
  CHECK(back.iteration == state.iteration);
  CHECK(back.seed == state.seed);
  CHECK(back.colloc_upper == state.colloc_upper);
  CHECK(back.config.final_learning_rate == cfg.final_learning_rate);
  CHECK_FALSE(back.config.colloc_resample);
  CHECK(back.config.state_hidden == cfg.state_hidden);
  CHECK(back.params.A == state.params.A);
  CHECK(back.loss_history.size() == state.loss_history.size());
  write_checkpoint(dir / "ck2.txt", back);
  CHECK(test::read_text(dir / "ck.txt") == test::read_text(dir / "ck2.txt"));

  test::write_text(dir / "bad.txt", "pcmnn-checkpoint 1\nseed=zz\n");
  CHECK_THROWS_AS(read_checkpoint(dir / "bad.txt"), DataError);
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.txt"), DataError);
}

TEST_CASE("n_data restricts observations and the collocation domain") {
  auto series = logistic_series(2.0);
  auto cfg = small_config();
  cfg.n_data = 25;
  auto state = initialize(series, LogisticParams{}, cfg);
  CHECK(state.colloc_upper == doctest::Approx(24.0 / 29.0));
  cfg.n_data = 40;
  CHECK_THROWS_AS(initialize(series, LogisticParams{}, cfg), DataError);
}

TEST_CASE("non-finite losses raise a numerical error naming the iteration") {
  auto series = logistic_series(2.0);
  series.population[3] = 1e200;
  auto cfg = small_config();
  cfg.iterations = 5;
  try {
    train(series, LogisticParams{}, cfg);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
  }
}

TEST_CASE("extracted modulation respects bounds and window") {
  auto series = logistic_series(2.0);
  auto cfg = small_config();
  auto state = train(series, LogisticParams{}, cfg);
  auto grid = day_grid(30);
  auto alpha = extract_alpha(state, climate_of(series), grid);
  REQUIRE(alpha.alpha.size() == 30);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(alpha.alpha[i] >= -1.372);
    CHECK(alpha.alpha[i] <= 0.628);
    CHECK(alpha.alpha[i] == state.alpha_at(series.temperature[i], series.humidity[i], grid[i]));
  }
  CHECK(alpha.growth_threshold == 0.0);
  CHECK(alpha.baseline == doctest::Approx(-0.372));
  CHECK_THROWS_AS(extract_alpha(state, climate_of(series), std::vector<double>{0.0, 31.0}), DataError);

  auto fn = state.alpha_function();
  CHECK(fn(25.0, 70.0, 3.0) == state.alpha_at(25.0, 70.0, 3.0));
}

TEST_CASE("output CSV writers") {
  auto series = logistic_series(2.0);
  auto cfg = small_config();
  cfg.iterations = 3;
  auto state = train(series, LogisticParams{}, cfg);
  auto dir = test::scratch_dir("pinn_csv");
  write_fit_csv(dir / "fit.csv", state, series);
  write_loss_history_csv(dir / "loss.csv", state);
  write_alpha_csv(dir / "alpha.csv", extract_alpha(state, climate_of(series), day_grid(30)));
  const auto loss = test::read_text(dir / "loss.csv");
  CHECK(loss.rfind("iteration,loss_data,loss_ode,total\n0,", 0) == 0);
  CHECK(std::count(loss.begin(), loss.end(), '\n') == 4);
  CHECK(test::read_text(dir / "fit.csv").rfind("t_day,x_obs,x_fit\n", 0) == 0);
  CHECK(test::read_text(dir / "alpha.csv").rfind("t_day,alpha_hat\n", 0) == 0);
}
