#include "pcmnn/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pcmnn/csv.hpp"
#include "pcmnn/error.hpp"
#include "pcmnn/random.hpp"

namespace pcmnn::synth {

Scenario Scenario::benchmark() { return Scenario{}; }

AlphaFunction Scenario::alpha_true() const {
  if (alpha_kind == "constant") return constant_alpha(alpha_value);
  return sinusoidal_alpha(alpha_amplitude, alpha_period);
}

Climate Scenario::climate() const {
  if (climate_kind == "file") {
    // Either a composite CSV or raw daily records.
    std::ifstream probe(climate_file);
    std::string header;
    std::getline(probe, header);
    ingest::CompositeSeries series;
    if (header.rfind("day_index", 0) == 0) {
      series = ingest::read_composite_csv(climate_file);
    } else {
      const auto records = ingest::window(ingest::load_csv(climate_file));
      series = ingest::composite(records, ingest::years_of(records));
    }
    Climate c = climate_of(series);
    if (static_cast<int>(c.size()) < days) throw DataError("scenario climate file covers fewer days than requested");
    c.temperature.resize(static_cast<std::size_t>(days));
    c.humidity.resize(static_cast<std::size_t>(days));
    return c;
  }
  Climate c = Climate::constant(temp_c, rh_pct, static_cast<std::size_t>(days));
  if (climate_kind == "sine") {
    for (int d = 0; d < days; ++d) {
      const double s = std::sin(2.0 * std::numbers::pi * d / climate_period);
      c.temperature[static_cast<std::size_t>(d)] += temp_amplitude * s;
      c.humidity[static_cast<std::size_t>(d)] = std::clamp(rh_pct + rh_amplitude * s, 0.0, 100.0);
    }
  }
  return c;
}

void Scenario::validate() const {
  params.validate();
  if (!(noise_sd >= 0.0)) throw UsageError("scenario: noise_sd must be nonnegative");
  if (!(x0 > 0.0)) throw UsageError("scenario: x0 must be positive");
  if (days < 2 || days > ingest::kWindowDays) throw UsageError("scenario: days must be in 2..30");
  if (alpha_kind != "sine" && alpha_kind != "constant") throw UsageError("scenario: alpha must be sine or constant");
  if (climate_kind != "constant" && climate_kind != "sine" && climate_kind != "file") {
    throw UsageError("scenario: climate must be constant, sine or file");
  }
  if (climate_kind == "sine" && climate_period == 0.0) throw UsageError("scenario: climate_period must be nonzero");
  if (alpha_kind == "sine" && alpha_period == 0.0) throw UsageError("scenario: alpha_period must be nonzero");
  if (!(rk4_step > 0.0)) throw UsageError("scenario: rk4_step must be positive");
  const auto alpha = alpha_true();
  for (int k = 0; k <= 100 * (days - 1); ++k) {
    const double a = alpha(temp_c, rh_pct, k / 100.0);
    if (a < params.alpha_min || a > params.alpha_max) {
      throw UsageError("scenario: alpha_true leaves [alpha_min, alpha_max]");
    }
  }
}

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto fields = csv::split(line, '=');
    if (fields.size() == 1 && fields[0].empty()) continue;
    const std::string where = "scenario line " + std::to_string(line_no);
    if (fields.size() != 2) throw UsageError(where + ": expected key=value");
    const std::string& key = fields[0];
    const std::string& v = fields[1];
    auto num = [&] { return csv::parse_double(v, where); };
    if (key == "A") s.params.A = num();
    else if (key == "B") s.params.B = num();
    else if (key == "T_star") s.params.T_star = num();
    else if (key == "H_star") s.params.H_star = num();
    else if (key == "alpha_min") s.params.alpha_min = num();
    else if (key == "alpha_max") s.params.alpha_max = num();
    else if (key == "alpha") s.alpha_kind = v;
    else if (key == "alpha_amplitude") s.alpha_amplitude = num();
    else if (key == "alpha_period") s.alpha_period = num();
    else if (key == "alpha_value") s.alpha_value = num();
    else if (key == "climate") s.climate_kind = v;
    else if (key == "temp_c") s.temp_c = num();
    else if (key == "rh_pct") s.rh_pct = num();
    else if (key == "temp_amplitude") s.temp_amplitude = num();
    else if (key == "rh_amplitude") s.rh_amplitude = num();
    else if (key == "climate_period") s.climate_period = num();
    else if (key == "climate_file") s.climate_file = v;
    else if (key == "x0") s.x0 = num();
    else if (key == "noise_sd") s.noise_sd = num();
    else if (key == "seed") s.seed = csv::parse_seed(v, where);
    else if (key == "days") s.days = static_cast<int>(csv::parse_int(v, where));
    else if (key == "year") s.year = static_cast<int>(csv::parse_int(v, where));
    else if (key == "rk4_step") s.rk4_step = num();
    else throw UsageError(where + ": unknown key '" + key + "'");
  }
  s.validate();
  return s;
}

Scenario read_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(path.string() + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str());
  if (s.climate_kind == "file" && std::filesystem::path(s.climate_file).is_relative()) {
    s.climate_file = (path.parent_path() / s.climate_file).string();
  }
  return s;
}

std::string scenario_text(const Scenario& s) {
  std::ostringstream os;
  auto f = [](double v) { return csv::format_double(v); };
  os << "A=" << f(s.params.A) << "\nB=" << f(s.params.B) << "\nT_star=" << f(s.params.T_star)
     << "\nH_star=" << f(s.params.H_star) << "\nalpha_min=" << f(s.params.alpha_min)
     << "\nalpha_max=" << f(s.params.alpha_max) << "\nalpha=" << s.alpha_kind
     << "\nalpha_amplitude=" << f(s.alpha_amplitude) << "\nalpha_period=" << f(s.alpha_period)
     << "\nalpha_value=" << f(s.alpha_value) << "\nclimate=" << s.climate_kind << "\ntemp_c=" << f(s.temp_c)
     << "\nrh_pct=" << f(s.rh_pct) << "\ntemp_amplitude=" << f(s.temp_amplitude)
     << "\nrh_amplitude=" << f(s.rh_amplitude) << "\nclimate_period=" << f(s.climate_period);
  if (!s.climate_file.empty()) os << "\nclimate_file=" << s.climate_file;
  os << "\nx0=" << f(s.x0) << "\nnoise_sd=" << f(s.noise_sd) << "\nseed=" << s.seed << "\ndays=" << s.days
     << "\nyear=" << s.year << "\nrk4_step=" << f(s.rk4_step) << '\n';
  return os.str();
}

Dataset generate(const Scenario& scenario) {
  scenario.validate();
  const Climate climate = scenario.climate();
  const auto grid = day_grid(static_cast<std::size_t>(scenario.days));
  const auto alpha = scenario.alpha_true();
  const Trajectory truth =
      integrate_rk4(scenario.params, alpha, scenario.x0, climate, grid, Rk4Options{scenario.rk4_step});

  Dataset out;
  out.truth.t_day = grid;
  out.truth.x_true = truth.x;
  out.truth.climate = climate;
  Rng rng(scenario.seed);
  auto& obs = out.observations;
  obs.n_years = 1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.truth.alpha_true.push_back(alpha(climate.temperature[i], climate.humidity[i], grid[i]));
    const double noisy = truth.x[i] + scenario.noise_sd * rng.normal();
    obs.day_index.push_back(static_cast<int>(i));
    obs.population.push_back(std::max(0.0, noisy));
    obs.temperature.push_back(climate.temperature[i]);
    obs.humidity.push_back(climate.humidity[i]);
  }
  return out;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw DataError("rmse: grid mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

RecoveryReport score_recovery(const TrainState& trained, const GroundTruth& truth, double x0_observed) {
  if (truth.t_day.size() != truth.x_true.size() || truth.t_day.size() != truth.alpha_true.size()) {
    throw DataError("score_recovery: ragged ground truth");
  }
  RecoveryReport r;
  const auto alpha = extract_alpha(trained, truth.climate, truth.t_day);
  r.alpha_rmse = rmse(alpha.alpha, truth.alpha_true);
  std::vector<double> fitted;
  for (double d : truth.t_day) fitted.push_back(trained.population_at(d));
  r.fit = metrics(truth.x_true, fitted, "fit");
  const int horizon = static_cast<int>(truth.t_day.back());
  const auto fc = forecast(trained, trained.params, x0_observed, truth.climate, horizon);
  r.forecast = metrics(truth.x_true, fc.x, "forecast");
  return r;
}

std::vector<ingest::DailyRecord> to_records(const Dataset& dataset, int year) {
  std::vector<ingest::DailyRecord> records;
  const auto& obs = dataset.observations;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto [month, day] = ingest::window_month_day(obs.day_index[i]);
    ingest::DailyRecord r;
    r.year = year;
    r.month = month;
    r.day = day;
    r.doy = ingest::day_of_year(year, month, day);
    r.male_count = std::llround(obs.population[i] / 2.0);
    r.temperature = obs.temperature[i];
    r.humidity = obs.humidity[i];
    records.push_back(r);
  }
  return records;
}

void write_ground_truth_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::vector<std::vector<std::string>> rows;
  const auto& t = dataset.truth;
  for (std::size_t i = 0; i < t.t_day.size(); ++i) {
    rows.push_back({std::to_string(i), csv::format_double(t.t_day[i]), csv::format_double(t.x_true[i]),
                    csv::format_double(t.alpha_true[i]), csv::format_double(dataset.observations.population[i])});
  }
  csv::write(path, {"day_index", "t_day", "x_true", "alpha_true", "x_obs"}, rows);
}

}  // namespace pcmnn::synth
