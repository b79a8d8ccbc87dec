#include "pcmnn/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pcmnn/csv.hpp"
#include "pcmnn/error.hpp"

namespace pcmnn {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"input", "", "daily input CSV files, comma separated"},
      {"composite", "", "composite CSV (instead of input)"},
      {"years", "", "years to composite, comma separated (default: all present)"},
      {"out", "run", "output directory"},
      {"checkpoint", "", "checkpoint path (default: <out>/checkpoint.txt)"},
      {"scenario", "", "synthetic scenario file"},
      {"A", "0.372", "baseline growth rate"},
      {"B", "0.0008", "density inhibition coefficient"},
      {"T_star", "21", "optimum temperature"},
      {"H_star", "84", "optimum humidity"},
      {"alpha_min", "-1.372", "lower bound of alpha"},
      {"alpha_max", "0.628", "upper bound of alpha"},
      {"n_data", "0", "leading days used for training (0 = all)"},
      {"n_colloc", "100", "collocation points per iteration"},
      {"lambda_data", "1", "data loss weight"},
      {"lambda_ode", "1", "ODE residual loss weight"},
      {"iterations", "10000", "optimizer steps"},
      {"seed", "42", "RNG seed"},
      {"colloc_resample", "true", "redraw collocation points every iteration"},
      {"learning_rate", "0.001", "initial Adam learning rate"},
      {"final_learning_rate", "0.001", "learning rate reached at the last iteration"},
      {"state_hidden", "32,32,32,32,32", "hidden widths of the state network"},
      {"alpha_hidden", "64,64,64", "hidden widths of the alpha network"},
      {"log_every", "1000", "progress line interval (0 = silent)"},
      {"prefit_start", "0", "first day_index of the prefit range"},
      {"prefit_end", "21", "last day_index of the prefit range"},
      {"fix_x0", "false", "hold x0 at the first observation during prefit"},
      {"rk4_step", "0.01", "RK4 substep in days"},
      {"x0", "", "forecast initial population (default: first observation)"},
      {"horizon", "", "forecast horizon in days (default: climate length - 1)"},
      {"m1", "", "sign diagnostic threshold on (T - T*)^2"},
      {"m2", "", "sign diagnostic threshold on (H - H*)^2"},
      {"truth", "", "evaluate: CSV with reference values"},
      {"pred", "", "evaluate: CSV with predicted values"},
      {"truth_column", "population", "evaluate: value column in the truth file"},
      {"pred_column", "population", "evaluate: value column in the prediction file"},
      {"label", "eval", "evaluate: metrics label"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
  it->second = value;
  explicit_.insert(key);
}

void RunConfig::load_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (csv::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(source + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key(csv::trim(std::string_view(line).substr(0, eq)));
    const std::string value(csv::trim(std::string_view(line).substr(eq + 1)));
    try {
      set(key, value);
    } catch (const UsageError& e) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(path.string() + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path.string());
}

void RunConfig::apply_environment() {
  if (const char* seed = std::getenv("PCMNN_SEED"); seed != nullptr && *seed != '\0') {
    try {
      csv::parse_seed(seed, "PCMNN_SEED");
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
    set("seed", seed);
  }
}

bool RunConfig::has(const std::string& key) const { return !get(key).empty(); }

std::string RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  try {
    return csv::parse_double(get(key), key);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

std::uint64_t RunConfig::get_seed() const {
  try {
    return csv::parse_seed(get("seed"), "seed");
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

long long RunConfig::get_int(const std::string& key) const {
  try {
    return csv::parse_int(get(key), key);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  for (auto& piece : csv::split(get(key))) {
    if (!piece.empty()) out.push_back(piece);
  }
  return out;
}

LogisticParams RunConfig::params() const {
  LogisticParams p;
  p.A = get_double("A");
  p.B = get_double("B");
  p.T_star = get_double("T_star");
  p.H_star = get_double("H_star");
  p.alpha_min = get_double("alpha_min");
  p.alpha_max = get_double("alpha_max");
  p.validate();
  return p;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.n_data = static_cast<int>(get_int("n_data"));
  c.n_colloc = static_cast<int>(get_int("n_colloc"));
  c.lambda_data = get_double("lambda_data");
  c.lambda_ode = get_double("lambda_ode");
  c.iterations = static_cast<int>(get_int("iterations"));
  c.seed = get_seed();
  c.colloc_resample = get_bool("colloc_resample");
  c.learning_rate = get_double("learning_rate");
  c.final_learning_rate = get_double("final_learning_rate");
  auto widths = [this](const std::string& key) {
    std::vector<int> w;
    for (const auto& s : get_list(key)) {
      try {
        w.push_back(static_cast<int>(csv::parse_int(s, key)));
      } catch (const DataError& e) {
        throw UsageError(e.what());
      }
    }
    return w;
  };
  c.state_hidden = widths("state_hidden");
  c.alpha_hidden = widths("alpha_hidden");
  c.validate();
  return c;
}

PrefitOptions RunConfig::prefit_options() const {
  PrefitOptions o;
  o.day_start = static_cast<int>(get_int("prefit_start"));
  o.day_end = static_cast<int>(get_int("prefit_end"));
  o.fix_x0 = get_bool("fix_x0");
  o.seed = get_seed();
  return o;
}

Rk4Options RunConfig::rk4_options() const {
  Rk4Options o;
  o.step = get_double("rk4_step");
  if (!(o.step > 0.0)) throw UsageError("rk4_step must be positive");
  return o;
}

std::string RunConfig::snapshot() const {
  std::ostringstream os;
  for (const auto& [key, value] : values_) os << key << '=' << value << '\n';
  return os.str();
}

}  // namespace pcmnn
