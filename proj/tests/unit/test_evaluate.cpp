#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcmnn/dynamics.hpp"
#include "pcmnn/error.hpp"
#include "pcmnn/evaluate.hpp"
#include "pcmnn/pinn.hpp"
#include "pcmnn/random.hpp"
#include "test_support.hpp"

using namespace pcmnn;

namespace {

ingest::CompositeSeries logistic_series(double x0) {
  LogisticParams p;
  ingest::CompositeSeries s;
  for (int d = 0; d < 30; ++d) {
    s.day_index.push_back(d);
    s.population.push_back(logistic_closed_form(p, x0, d));
    s.temperature.push_back(21.0);
    s.humidity.push_back(84.0);
  }
  s.n_years = 1;
  return s;
}

// Trained state whose modulation network is identically zero.
TrainState zero_alpha_state(const ingest::CompositeSeries& series) {
  TrainConfig cfg;
  cfg.state_hidden = {4};
  cfg.alpha_hidden = {2};
  LogisticParams p;
  auto state = initialize(series, p, cfg);
  auto net = MlpNetwork::zeros({3, 2, 1}, OutputMap::bounded(p.alpha_min, p.alpha_max));
  const double u = -p.alpha_min / (p.alpha_max - p.alpha_min);
  net.biases[1](0, 0) = std::log(u / (1.0 - u));
  state.alpha_net = net;
  return state;
}

}  // namespace

TEST_CASE("metrics golden values") {
  const std::vector<double> t{1, 2, 3}, p{2, 2, 2};
  auto m = metrics(t, p, "golden");
  CHECK(m.n == 3);
  CHECK(std::abs(m.mse - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(m.mae - 2.0 / 3.0) < 1e-12);
  REQUIRE(m.r2.has_value());
  CHECK(std::abs(*m.r2) < 1e-12);

  auto perfect = metrics(t, t);
  CHECK(perfect.mse == 0.0);
  CHECK(perfect.mae == 0.0);
  CHECK(*perfect.r2 == 1.0);
}

TEST_CASE("mae is an absolute error") {
  auto m = metrics(std::vector<double>{0, 0}, std::vector<double>{1, -1});
  CHECK(m.mae == 1.0);
  CHECK(m.mse == 1.0);
}

TEST_CASE("mae squared never exceeds mse and metrics are permutation invariant") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 20);
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = rng.normal(0.0, 10.0);
      b[i] = rng.normal(0.0, 10.0);
    }
    auto m = metrics(a, b);
    CHECK(m.mae * m.mae <= m.mse * (1.0 + 1e-12));
    if (trial % 50 == 0) {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      std::reverse(idx.begin(), idx.end());
      std::vector<double> pa, pb;
      for (auto i : idx) {
        pa.push_back(a[i]);
        pb.push_back(b[i]);
      }
      auto mp = metrics(pa, pb);
      CHECK(mp.mse == doctest::Approx(m.mse).epsilon(1e-14));
      CHECK(mp.mae == doctest::Approx(m.mae).epsilon(1e-14));
      CHECK(*mp.r2 == doctest::Approx(*m.r2).epsilon(1e-12));
    }
  }
}

TEST_CASE("metrics edge cases") {
  auto flat = metrics(std::vector<double>{3, 3, 3}, std::vector<double>{3, 2, 3});
  CHECK_FALSE(flat.r2.has_value());
  CHECK(metrics_csv_row(flat).back() == "nan");
  CHECK_THROWS_AS(metrics(std::vector<double>{1}, std::vector<double>{1}), DataError);
  CHECK_THROWS_AS(metrics(std::vector<double>{1, 2}, std::vector<double>{1}), DataError);
  CHECK(metrics_csv_header() == std::vector<std::string>{"label", "n", "mse", "mae", "r2"});
  auto table = metrics_table({metrics(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}, "x")});
  CHECK(table.find("x") != std::string::npos);
  auto dir = test::scratch_dir("evaluate_csv");
  write_metrics_csv(dir / "m.csv", {metrics(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}, "x")});
  CHECK(test::read_text(dir / "m.csv").rfind("label,n,mse,mae,r2\nx,3,", 0) == 0);
}

TEST_CASE("zero modulation on unmodulated logistic data back-solves to the data") {
  auto series = logistic_series(2.0);
  auto state = zero_alpha_state(series);
  auto r = verify_backsolve(state, LogisticParams{}, series, climate_of(series));
  REQUIRE(r.metrics.r2.has_value());
  CHECK(*r.metrics.r2 >= 0.999);
  CHECK(r.trajectory.x.size() == 30);
  CHECK(r.warnings.empty());
  for (std::size_t i = 0; i < 30; ++i) CHECK(r.trajectory.x[i] == doctest::Approx(series.population[i]).epsilon(1e-8));
}

TEST_CASE("zero initial value gives a flat trajectory and a warning") {
  auto series = logistic_series(2.0);
  auto state = zero_alpha_state(series);
  series.population[0] = 0.0;
  auto r = verify_backsolve(state, LogisticParams{}, series, climate_of(series));
  for (double x : r.trajectory.x) CHECK(x == 0.0);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("zero") != std::string::npos);
}

TEST_CASE("forecast from the first value coincides with the back-solve") {
  auto series = logistic_series(2.0);
  auto state = zero_alpha_state(series);
  state.alpha_net.biases[1](0, 0) += 0.3;
  const auto climate = climate_of(series);
  auto bs = verify_backsolve(state, LogisticParams{}, series, climate);
  auto fc = forecast(state, LogisticParams{}, series.population[0], climate, 29);
  CHECK(fc.x == bs.trajectory.x);
  auto again = forecast(state, LogisticParams{}, series.population[0], climate, 29);
  CHECK(again.x == fc.x);

  auto zero = forecast(state, LogisticParams{}, 5.0, climate, 0);
  CHECK(zero.x == std::vector<double>{5.0});
  CHECK(zero.t == std::vector<double>{0.0});
  CHECK_THROWS_AS(forecast(state, LogisticParams{}, 5.0, climate, 40), DataError);
  CHECK_THROWS_AS(forecast(state, LogisticParams{}, 0.0, climate, 5), std::domain_error);
}

TEST_CASE("identity setup converges to the generating trajectory at fourth order") {
  LogisticParams p;
  auto alpha = sinusoidal_alpha(0.3, 30.0);
  auto climate = Climate::constant(21, 84, 30);
  auto grid = day_grid(30);
  auto reference = integrate_rk4(p, alpha, 2.0, climate, grid, Rk4Options{1e-3});
  auto err = [&](double h) {
    auto t = integrate_rk4(p, alpha, 2.0, climate, grid, Rk4Options{h});
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(t.x[i] - reference.x[i]));
    return worst;
  };
  for (double h : {0.5, 0.25}) {
    const double ratio = err(h) / err(h / 2.0);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
  }
}

TEST_CASE("sup relative gap") {
  CHECK(sup_relative_gap(std::vector<double>{1, 2, 4}, std::vector<double>{1, 2, 5}) == doctest::Approx(0.2));
  CHECK(sup_relative_gap(std::vector<double>{3, 3}, std::vector<double>{3, 3}) == 0.0);
  CHECK_THROWS_AS(sup_relative_gap(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
}
