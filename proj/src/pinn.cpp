#include "pcmnn/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pcmnn/csv.hpp"
#include "pcmnn/error.hpp"

namespace pcmnn {

namespace {

// Decorrelates the collocation stream from the initialization stream.
constexpr std::uint64_t kCollocationStream = 0x9e3779b97f4a7c15ULL;

std::vector<int> layers(int input, const std::vector<int>& hidden) {
  std::vector<int> out{input};
  out.insert(out.end(), hidden.begin(), hidden.end());
  out.push_back(1);
  return out;
}

ad::Matrix alpha_features(const ingest::NormalizationSpec& norm, const Climate& climate,
                          const std::vector<double>& unit_times) {
  ad::Matrix f(static_cast<Eigen::Index>(unit_times.size()), 3);
  for (std::size_t i = 0; i < unit_times.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const auto [T, H] = climate.at(norm.to_day(unit_times[i]));
    f(row, 0) = norm.temp_feature(T);
    f(row, 1) = norm.hum_feature(H);
    f(row, 2) = unit_times[i];
  }
  return f;
}

ad::Matrix column_of(const std::vector<double>& v) {
  ad::Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

ad::Var data_loss_node(ad::Tape& tape, const BoundNetwork& state, const ingest::NormalizedSeries& obs) {
  ad::Var x = forward(state, tape.constant(column_of(obs.t)));
  ad::Var y = tape.constant(column_of(obs.population));
  return ad::mean(ad::square(x - y));
}

struct OdeNodes {
  ad::Var loss;
  ad::Var residual;
};

OdeNodes ode_loss_node(ad::Tape& tape, const BoundNetwork& state, const BoundNetwork& alpha,
                       const LogisticParams& params, const Climate& climate, const ingest::NormalizationSpec& norm,
                       const std::vector<double>& colloc) {
  const auto n = static_cast<Eigen::Index>(colloc.size());
  const auto out = forward_with_tangent(state, tape.constant(column_of(colloc)), ad::Matrix::Ones(n, 1));
  // d/dt_day = (1 / t_span) d/dt_unit
  ad::Var dxdt = (1.0 / norm.t_span) * out.tangent;
  ad::Var a = forward(alpha, tape.constant(alpha_features(norm, climate, colloc)));
  ad::Var x = out.value;
  ad::Var growth = params.A * x + a * x - params.B * ad::square(x);
  ad::Var residual = dxdt - growth;
  return {ad::mean(ad::square(residual)), residual};
}

void check_finite(double value, const char* component, std::int64_t iteration) {
  if (!std::isfinite(value)) {
    throw NumericalError(std::string("non-finite ") + component + " loss at iteration " + std::to_string(iteration));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations <= 0) throw UsageError("iterations must be positive");
  if (n_colloc < 1) throw UsageError("n_colloc must be at least 1");
  if (n_data < 0) throw UsageError("n_data must be nonnegative");
  if (!(lambda_data >= 0.0) || !(lambda_ode >= 0.0)) throw UsageError("loss weights must be nonnegative");
  if (lambda_data == 0.0 && lambda_ode == 0.0) throw UsageError("loss weights cannot both be zero");
  if (!(learning_rate > 0.0) || !(final_learning_rate > 0.0)) throw UsageError("learning rates must be positive");
  if (state_hidden.empty() || alpha_hidden.empty()) throw UsageError("networks need at least one hidden layer");
  for (int w : state_hidden) {
    if (w <= 0) throw UsageError("state_hidden widths must be positive");
  }
  for (int w : alpha_hidden) {
    if (w <= 0) throw UsageError("alpha_hidden widths must be positive");
  }
}

double TrainConfig::learning_rate_at(int iteration) const {
  if (final_learning_rate == learning_rate || iterations <= 1) return learning_rate;
  const double progress = static_cast<double>(iteration) / static_cast<double>(iterations - 1);
  return learning_rate * std::pow(final_learning_rate / learning_rate, progress);
}

double TrainState::population_at(double t_day) const {
  const double t = norm.to_unit(t_day);
  return state_net.evaluate(std::span<const double>(&t, 1));
}

double TrainState::alpha_at(double temperature, double humidity, double t_day) const {
  const double features[3] = {norm.temp_feature(temperature), norm.hum_feature(humidity), norm.to_unit(t_day)};
  return alpha_net.evaluate(features);
}

AlphaFunction TrainState::alpha_function() const {
  // Captures copies so the function outlives the state.
  return [net = alpha_net, norm = norm](double T, double H, double t_day) {
    const double features[3] = {norm.temp_feature(T), norm.hum_feature(H), norm.to_unit(t_day)};
    return net.evaluate(features);
  };
}

Climate climate_of(const ingest::CompositeSeries& series) {
  Climate c;
  c.temperature = series.temperature;
  c.humidity = series.humidity;
  return c;
}

TrainState initialize(const ingest::CompositeSeries& series, const LogisticParams& params, const TrainConfig& config,
                      const ingest::NormalizationSpec& norm) {
  config.validate();
  params.validate();
  norm.validate();
  if (series.size() == 0) throw DataError("train: empty series");
  const auto obs = config.n_data > 0 ? series.head(static_cast<std::size_t>(config.n_data)) : series;

  TrainState state;
  state.config = config;
  state.params = params;
  state.norm = norm;
  state.norm.T_star = params.T_star;
  state.norm.H_star = params.H_star;
  state.seed = config.seed;

  const double peak = *std::max_element(obs.population.begin(), obs.population.end());
  const double x_scale = peak > 0.0 ? peak : 1.0;
  Rng rng(config.seed);
  state.state_net = MlpNetwork::create(layers(1, config.state_hidden), OutputMap::affine(x_scale), rng);
  state.alpha_net =
      MlpNetwork::create(layers(3, config.alpha_hidden), OutputMap::bounded(params.alpha_min, params.alpha_max), rng);
  state.adam = AdamState(state.state_net.num_params() + state.alpha_net.num_params(),
                         AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
  state.colloc_upper = std::clamp(state.norm.to_unit(obs.day_index.back()), 0.0, 1.0);
  return state;
}

double loss_data(const MlpNetwork& state_net, const ingest::NormalizedSeries& series) {
  if (series.t.empty()) throw DataError("loss_data: empty series");
  ad::Tape tape;
  return data_loss_node(tape, bind(tape, state_net), series).scalar();
}

double loss_ode(const MlpNetwork& state_net, const MlpNetwork& alpha_net, const LogisticParams& params,
                const Climate& climate, const ingest::NormalizationSpec& norm, const std::vector<double>& colloc_points) {
  if (colloc_points.empty()) throw UsageError("loss_ode: no collocation points");
  ad::Tape tape;
  const auto nodes = ode_loss_node(tape, bind(tape, state_net), bind(tape, alpha_net), params, climate, norm,
                                   colloc_points);
  const auto& r = nodes.residual.value();
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    if (!std::isfinite(r(i, 0))) {
      throw NumericalError("loss_ode: non-finite residual at collocation point t = " +
                           csv::format_double(colloc_points[static_cast<std::size_t>(i)]));
    }
  }
  return nodes.loss.scalar();
}

std::vector<double> sample_collocation(int n_colloc, Rng& rng, double upper) {
  if (n_colloc < 1) throw UsageError("sample_collocation: n_colloc must be at least 1");
  std::vector<double> points(static_cast<std::size_t>(n_colloc));
  for (auto& p : points) p = upper * rng.uniform();
  return points;
}

LossGradient loss_and_gradient(const TrainState& state, const ingest::NormalizedSeries& observations,
                               const Climate& climate, const std::vector<double>& colloc_points) {
  const TrainConfig& cfg = state.config;
  ad::Tape tape;
  const BoundNetwork state_bound = bind(tape, state.state_net);
  const BoundNetwork alpha_bound = bind(tape, state.alpha_net);
  ad::Var data = data_loss_node(tape, state_bound, observations);
  ad::Var ode =
      ode_loss_node(tape, state_bound, alpha_bound, state.params, climate, state.norm, colloc_points).loss;
  ad::Var total = cfg.lambda_data * data + cfg.lambda_ode * ode;

  LossGradient out;
  out.loss = {data.scalar(), ode.scalar(), total.scalar()};
  check_finite(out.loss.data, "data", state.iteration);
  check_finite(out.loss.ode, "ode", state.iteration);
  tape.backward(total);
  out.grad = state_bound.grad();
  const auto g_alpha = alpha_bound.grad();
  out.grad.insert(out.grad.end(), g_alpha.begin(), g_alpha.end());
  return out;
}

void train_steps(TrainState& state, const ingest::CompositeSeries& series, std::int64_t steps,
                 const ProgressFn& progress) {
  const auto obs_series =
      state.config.n_data > 0 ? series.head(static_cast<std::size_t>(state.config.n_data)) : series;
  const auto observations = ingest::normalize(obs_series, state.norm);
  const Climate climate = climate_of(obs_series);

  // The collocation stream is a pure function of (seed, iteration), so a
  // resumed run draws the same points as an uninterrupted one.
  Rng colloc_rng(state.seed ^ kCollocationStream);
  std::vector<double> colloc = sample_collocation(state.config.n_colloc, colloc_rng, state.colloc_upper);
  if (state.config.colloc_resample) {
    for (std::int64_t i = 0; i < state.iteration; ++i) {
      colloc = sample_collocation(state.config.n_colloc, colloc_rng, state.colloc_upper);
    }
  }

  std::vector<double> params = state.state_net.flatten();
  const std::size_t n_state = params.size();
  const auto alpha_params = state.alpha_net.flatten();
  params.insert(params.end(), alpha_params.begin(), alpha_params.end());

  for (std::int64_t step = 0; step < steps; ++step) {
    if (state.config.colloc_resample && step > 0) {
      colloc = sample_collocation(state.config.n_colloc, colloc_rng, state.colloc_upper);
    }
    const LossGradient lg = loss_and_gradient(state, observations, climate, colloc);
    state.loss_history.push_back(lg.loss);
    if (progress) progress(state.iteration, lg.loss);
    const double lr = state.config.learning_rate_at(static_cast<int>(state.iteration));
    adam_step(params, lg.grad, state.adam, "total loss", lr);
    state.state_net.unflatten(std::span<const double>(params).first(n_state));
    state.alpha_net.unflatten(std::span<const double>(params).subspan(n_state));
    ++state.iteration;
  }
}

TrainState train(const ingest::CompositeSeries& series, const LogisticParams& params, const TrainConfig& config,
                 const ProgressFn& progress, const ingest::NormalizationSpec& norm) {
  TrainState state = initialize(series, params, config, norm);
  train_steps(state, series, config.iterations, progress);
  const auto& h = state.loss_history;
  if (!h.empty() && h.back().total > h.front().total) {
    state.warnings.push_back("final total loss exceeds initial total loss");
  }
  const auto obs_series = config.n_data > 0 ? series.head(static_cast<std::size_t>(config.n_data)) : series;
  for (int d : obs_series.day_index) {
    if (state.population_at(d) < 0.0) {
      state.warnings.push_back("fitted population negative at day " + std::to_string(d));
      break;
    }
  }
  return state;
}

AlphaSeries extract_alpha(const TrainState& state, const Climate& climate, const std::vector<double>& grid) {
  AlphaSeries out;
  out.baseline = -state.params.A;
  for (double day : grid) {
    const double u = state.norm.to_unit(day);
    if (!(u >= -1e-12 && u <= 1.0 + 1e-12)) {
      throw DataError("extract_alpha: day " + csv::format_double(day) + " outside the window");
    }
    const auto [T, H] = climate.at(day);
    out.t_day.push_back(day);
    out.alpha.push_back(state.alpha_at(T, H, day));
  }
  return out;
}

// Checkpoint layout (text, one item per line):
//   pcmnn-checkpoint 1
//   key=value lines (config, parameters, normalization, counters)
//   state network block, alpha network block (see write_network)
//   adam <n> then first and second moments, hex floats
//   history <n> then one "data ode total" line per iteration
//   end-checkpoint
void write_checkpoint(std::ostream& out, const TrainState& s) {
  auto ints = [](const std::vector<int>& v) {
    std::string r;
    for (std::size_t i = 0; i < v.size(); ++i) r += (i ? "," : "") + std::to_string(v[i]);
    return r;
  };
  const auto& c = s.config;
  out << "pcmnn-checkpoint 1\n";
  out << "n_data=" << c.n_data << "\nn_colloc=" << c.n_colloc << "\nlambda_data=" << csv::format_hex(c.lambda_data)
      << "\nlambda_ode=" << csv::format_hex(c.lambda_ode) << "\niterations=" << c.iterations << "\nseed=" << c.seed
      << "\ncolloc_resample=" << (c.colloc_resample ? 1 : 0) << "\nlearning_rate=" << csv::format_hex(c.learning_rate)
      << "\nfinal_learning_rate=" << csv::format_hex(c.final_learning_rate) << "\nstate_hidden=" << ints(c.state_hidden)
      << "\nalpha_hidden=" << ints(c.alpha_hidden) << '\n';
  const auto& p = s.params;
  out << "A=" << csv::format_hex(p.A) << "\nB=" << csv::format_hex(p.B) << "\nT_star=" << csv::format_hex(p.T_star)
      << "\nH_star=" << csv::format_hex(p.H_star) << "\nalpha_min=" << csv::format_hex(p.alpha_min)
      << "\nalpha_max=" << csv::format_hex(p.alpha_max) << '\n';
  const auto& n = s.norm;
  out << "t_origin=" << csv::format_hex(n.t_origin) << "\nt_span=" << csv::format_hex(n.t_span)
      << "\ntemp_feature_scale=" << csv::format_hex(n.temp_feature_scale)
      << "\nhum_feature_scale=" << csv::format_hex(n.hum_feature_scale) << '\n';
  out << "run_seed=" << s.seed << "\niteration=" << s.iteration << "\ncolloc_upper=" << csv::format_hex(s.colloc_upper)
      << "\nadam_step=" << s.adam.step_count << '\n';
  write_network(out, s.state_net);
  write_network(out, s.alpha_net);
  out << "adam " << s.adam.first_moment.size() << '\n';
  for (double m : s.adam.first_moment) out << csv::format_hex(m) << '\n';
  for (double v : s.adam.second_moment) out << csv::format_hex(v) << '\n';
  out << "history " << s.loss_history.size() << '\n';
  for (const auto& r : s.loss_history) {
    out << csv::format_hex(r.data) << ' ' << csv::format_hex(r.ode) << ' ' << csv::format_hex(r.total) << '\n';
  }
  out << "end-checkpoint\n";
}

TrainState read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "pcmnn-checkpoint 1") throw DataError("checkpoint: bad header");
  TrainState s;
  auto parse_ints = [](const std::string& v) {
    std::vector<int> out;
    for (const auto& piece : csv::split(v)) out.push_back(static_cast<int>(csv::parse_int(piece, "checkpoint")));
    return out;
  };
  const char* where = "checkpoint";
  while (in.peek() != 'p' && std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("checkpoint: expected key=value, got '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string v = line.substr(eq + 1);
    auto& c = s.config;
    if (key == "n_data") c.n_data = static_cast<int>(csv::parse_int(v, where));
    else if (key == "n_colloc") c.n_colloc = static_cast<int>(csv::parse_int(v, where));
    else if (key == "lambda_data") c.lambda_data = csv::parse_hex(v, where);
    else if (key == "lambda_ode") c.lambda_ode = csv::parse_hex(v, where);
    else if (key == "iterations") c.iterations = static_cast<int>(csv::parse_int(v, where));
    else if (key == "seed") c.seed = csv::parse_seed(v, where);
    else if (key == "colloc_resample") c.colloc_resample = v == "1";
    else if (key == "learning_rate") c.learning_rate = csv::parse_hex(v, where);
    else if (key == "final_learning_rate") c.final_learning_rate = csv::parse_hex(v, where);
    else if (key == "state_hidden") c.state_hidden = parse_ints(v);
    else if (key == "alpha_hidden") c.alpha_hidden = parse_ints(v);
    else if (key == "A") s.params.A = csv::parse_hex(v, where);
    else if (key == "B") s.params.B = csv::parse_hex(v, where);
    else if (key == "T_star") s.params.T_star = s.norm.T_star = csv::parse_hex(v, where);
    else if (key == "H_star") s.params.H_star = s.norm.H_star = csv::parse_hex(v, where);
    else if (key == "alpha_min") s.params.alpha_min = csv::parse_hex(v, where);
    else if (key == "alpha_max") s.params.alpha_max = csv::parse_hex(v, where);
    else if (key == "t_origin") s.norm.t_origin = csv::parse_hex(v, where);
    else if (key == "t_span") s.norm.t_span = csv::parse_hex(v, where);
    else if (key == "temp_feature_scale") s.norm.temp_feature_scale = csv::parse_hex(v, where);
    else if (key == "hum_feature_scale") s.norm.hum_feature_scale = csv::parse_hex(v, where);
    else if (key == "run_seed") s.seed = csv::parse_seed(v, where);
    else if (key == "iteration") s.iteration = csv::parse_int(v, where);
    else if (key == "colloc_upper") s.colloc_upper = csv::parse_hex(v, where);
    else if (key == "adam_step") s.adam.step_count = csv::parse_int(v, where);
    else throw DataError("checkpoint: unknown key '" + key + "'");
  }
  s.state_net = read_network(in);
  s.alpha_net = read_network(in);
  std::string word;
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "adam") throw DataError("checkpoint: missing adam block");
  s.adam.config = AdamConfig{s.config.learning_rate, 0.9, 0.999, 1e-8};
  s.adam.first_moment.resize(count);
  s.adam.second_moment.resize(count);
  for (auto& m : s.adam.first_moment) {
    in >> word;
    m = csv::parse_hex(word, where);
  }
  for (auto& v : s.adam.second_moment) {
    in >> word;
    v = csv::parse_hex(word, where);
  }
  if (!(in >> word >> count) || word != "history") throw DataError("checkpoint: missing history block");
  s.loss_history.resize(count);
  for (auto& r : s.loss_history) {
    std::string a, b, c;
    in >> a >> b >> c;
    r = {csv::parse_hex(a, where), csv::parse_hex(b, where), csv::parse_hex(c, where)};
  }
  if (!(in >> word) || word != "end-checkpoint") throw DataError("checkpoint: truncated");
  if (count != 0 && s.adam.first_moment.size() != s.state_net.num_params() + s.alpha_net.num_params()) {
    throw DataError("checkpoint: optimizer size does not match networks");
  }
  return s;
}

void write_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot write checkpoint");
  write_checkpoint(out, state);
}

TrainState read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open checkpoint");
  return read_checkpoint(in);
}

void write_fit_csv(const std::filesystem::path& path, const TrainState& state, const ingest::CompositeSeries& series) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double day = series.day_index[i];
    rows.push_back({csv::format_double(day), csv::format_double(series.population[i]),
                    csv::format_double(state.population_at(day))});
  }
  csv::write(path, {"t_day", "x_obs", "x_fit"}, rows);
}

void write_alpha_csv(const std::filesystem::path& path, const AlphaSeries& alpha) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < alpha.t_day.size(); ++i) {
    rows.push_back({csv::format_double(alpha.t_day[i]), csv::format_double(alpha.alpha[i])});
  }
  csv::write(path, {"t_day", "alpha_hat"}, rows);
}

void write_loss_history_csv(const std::filesystem::path& path, const TrainState& state) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < state.loss_history.size(); ++i) {
    const auto& r = state.loss_history[i];
    rows.push_back({std::to_string(i), csv::format_double(r.data), csv::format_double(r.ode),
                    csv::format_double(r.total)});
  }
  csv::write(path, {"iteration", "loss_data", "loss_ode", "total"}, rows);
}

}  // namespace pcmnn
