#include "pcmnn/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "pcmnn/config.hpp"
#include "pcmnn/csv.hpp"
#include "pcmnn/error.hpp"
#include "pcmnn/evaluate.hpp"
#include "pcmnn/ingest.hpp"
#include "pcmnn/pinn.hpp"
#include "pcmnn/prefit.hpp"
#include "pcmnn/synth.hpp"

namespace pcmnn::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
  RunConfig config;
  std::vector<fs::path> inputs;  // files whose checksums go into the manifest
  std::ostream& out;
  std::ostream& err;
};

fs::path out_dir(const Context& ctx) { return fs::path(ctx.config.get("out")); }

void write_manifest(const Context& ctx, const std::string& command) {
  const fs::path path = out_dir(ctx) / "manifest.txt";
  fs::create_directories(path.parent_path());
  std::ofstream m(path, std::ios::binary);
  m << "# pcmnn run manifest; usable as --config to reproduce the run\n";
  m << "# command=" << command << '\n';
  m << "# version=" << PCMNN_VERSION << '\n';
  for (const auto& in : ctx.inputs) m << "# input " << in.string() << " fnv1a64=" << csv::file_digest(in) << '\n';
  m << ctx.config.snapshot();
}

ingest::CompositeSeries load_series(Context& ctx) {
  const auto& cfg = ctx.config;
  if (cfg.has("composite")) {
    const fs::path p = cfg.get("composite");
    auto series = ingest::read_composite_csv(p);
    ctx.inputs.push_back(p);
    return series;
  }
  const auto files = cfg.get_list("input");
  if (files.empty()) throw UsageError("no input: pass --input or --composite");
  std::vector<ingest::DailyRecord> records;
  for (const auto& f : files) {
    auto part = ingest::load_csv(f);
    records.insert(records.end(), part.begin(), part.end());
    ctx.inputs.emplace_back(f);
  }
  if (records.empty()) throw DataError("input files contain no records");
  std::set<int> years;
  for (const auto& y : cfg.get_list("years")) years.insert(static_cast<int>(csv::parse_int(y, "years")));
  if (years.empty()) years = ingest::years_of(records);
  return ingest::composite(ingest::window(records), years);
}

fs::path checkpoint_path(const Context& ctx) {
  if (ctx.config.has("checkpoint")) return ctx.config.get("checkpoint");
  return out_dir(ctx) / "checkpoint.txt";
}

TrainState load_checkpoint(Context& ctx) {
  const fs::path p = checkpoint_path(ctx);
  if (!fs::exists(p)) throw UsageError("checkpoint not found: " + p.string());
  ctx.inputs.push_back(p);
  return read_checkpoint(p);
}

int cmd_preprocess(Context& ctx) {
  const auto series = load_series(ctx);
  const fs::path path = out_dir(ctx) / "composite.csv";
  ingest::write_composite_csv(path, series);
  write_manifest(ctx, "preprocess");
  ctx.out << "wrote " << path.string() << " (" << series.size() << " days, " << series.n_years << " years)\n";
  return kExitOk;
}

int cmd_prefit(Context& ctx) {
  const auto series = load_series(ctx);
  const auto result = fit_logistic(series, ctx.config.prefit_options());
  const fs::path dir = out_dir(ctx);
  fs::create_directories(dir);
  std::ofstream(dir / "prefit.txt", std::ios::binary) << result.to_text();
  csv::write(dir / "prefit.csv", prefit_csv_header(), {prefit_csv_row(result)});
  write_prefit_curve_csv(dir / "prefit_curve.csv", series, result);
  write_manifest(ctx, "prefit");
  ctx.out << result.to_text();
  if (!result.converged) throw NumericalError("prefit did not converge: " + result.message);
  if (result.ill_conditioned) ctx.err << "pcmnn: warning: " << result.message << '\n';
  return kExitOk;
}

int cmd_train(Context& ctx) {
  const auto series = load_series(ctx);
  const auto params = ctx.config.params();
  const auto tc = ctx.config.train_config();
  const auto log_every = ctx.config.get_int("log_every");
  ProgressFn progress;
  if (log_every > 0) {
    progress = [&ctx, log_every](std::int64_t it, const LossRecord& l) {
      if (it % log_every == 0) {
        ctx.out << "iter " << it << " loss_data=" << csv::format_double(l.data)
                << " loss_ode=" << csv::format_double(l.ode) << " total=" << csv::format_double(l.total) << '\n';
      }
    };
  }
  const TrainState state = train(series, params, tc, progress);
  for (const auto& w : state.warnings) ctx.err << "pcmnn: warning: " << w << '\n';

  const fs::path dir = out_dir(ctx);
  write_checkpoint(checkpoint_path(ctx), state);
  const auto used = tc.n_data > 0 ? series.head(static_cast<std::size_t>(tc.n_data)) : series;
  write_fit_csv(dir / "fit.csv", state, used);
  std::vector<double> grid;
  for (int d : used.day_index) grid.push_back(d);
  write_alpha_csv(dir / "alpha.csv", extract_alpha(state, climate_of(used), grid));
  write_loss_history_csv(dir / "loss_history.csv", state);
  std::vector<double> fitted;
  for (int d : used.day_index) fitted.push_back(state.population_at(d));
  const auto m = metrics(used.population, fitted, "fit");
  write_metrics_csv(dir / "metrics.csv", {m});
  write_manifest(ctx, "train");
  ctx.out << metrics_table({m});
  return kExitOk;
}

int cmd_verify(Context& ctx) {
  const TrainState state = load_checkpoint(ctx);
  auto series = load_series(ctx);
  if (state.config.n_data > 0 && series.size() > static_cast<std::size_t>(state.config.n_data)) {
    series = series.head(static_cast<std::size_t>(state.config.n_data));
  }
  const Climate climate = climate_of(series);
  const auto bs = verify_backsolve(state, state.params, series, climate, ctx.config.rk4_options());
  for (const auto& w : bs.warnings) ctx.err << "pcmnn: warning: " << w << '\n';
  if (bs.trajectory.clip_count > 0) {
    ctx.err << "pcmnn: warning: negative population clipped " << bs.trajectory.clip_count << " times\n";
  }

  const fs::path dir = out_dir(ctx);
  write_trajectory_csv(dir / "backsolve.csv", bs.trajectory);
  write_fit_csv(dir / "fit.csv", state, series);
  std::vector<double> grid;
  for (int d : series.day_index) grid.push_back(d);
  const auto alpha = extract_alpha(state, climate, grid);
  write_alpha_csv(dir / "alpha.csv", alpha);
  std::vector<double> fitted;
  for (int d : series.day_index) fitted.push_back(state.population_at(d));
  const auto fit = metrics(series.population, fitted, "fit");
  write_metrics_csv(dir / "metrics.csv", {fit, bs.metrics});
  if (ctx.config.has("m1") && ctx.config.has("m2")) {
    const auto diag = sign_diagnostic(state.params, alpha.alpha, series.temperature, series.humidity,
                                      ctx.config.get_double("m1"), ctx.config.get_double("m2"));
    std::ofstream(dir / "diagnostic.txt", std::ios::binary) << diag.report();
    ctx.out << diag.report();
  }
  write_manifest(ctx, "verify");
  ctx.out << metrics_table({fit, bs.metrics});
  ctx.out << "sup relative gap (backsolve vs x_nn): " << csv::format_double(sup_relative_gap(bs.trajectory.x, fitted))
          << '\n';
  return kExitOk;
}

int cmd_forecast(Context& ctx) {
  const TrainState state = load_checkpoint(ctx);
  const auto series = load_series(ctx);
  const Climate climate = climate_of(series);
  const double x0 = ctx.config.has("x0") ? ctx.config.get_double("x0") : series.population.front();
  if (!(x0 > 0.0)) throw DataError("forecast: initial population must be positive");
  const int horizon = ctx.config.has("horizon") ? static_cast<int>(ctx.config.get_int("horizon"))
                                                : static_cast<int>(climate.size()) - 1;
  if (horizon < 0) throw UsageError("horizon must be nonnegative");
  const auto fc = forecast(state, state.params, x0, climate, horizon, ctx.config.rk4_options());
  const fs::path dir = out_dir(ctx);
  write_trajectory_csv(dir / "forecast.csv", fc);
  const std::size_t n = std::min(fc.x.size(), series.size());
  if (n >= 2) {
    const auto m = metrics(std::span(series.population).first(n), std::span(fc.x).first(n), "forecast");
    write_metrics_csv(dir / "metrics.csv", {m});
    ctx.out << metrics_table({m});
  }
  write_manifest(ctx, "forecast");
  ctx.out << "wrote " << (dir / "forecast.csv").string() << '\n';
  return kExitOk;
}

std::map<double, double> read_column(const fs::path& path, const std::string& column) {
  const auto table = csv::read(path);
  std::size_t c_t = 0;
  try {
    c_t = table.column("t_day");
  } catch (const DataError&) {
    c_t = table.column("day_index");
  }
  const auto c_v = table.column(column);
  std::map<double, double> values;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
    const auto& row = table.rows[i];
    if (row.size() != table.header.size()) throw DataError(where + ": wrong field count");
    if (row[c_v].empty()) continue;
    values[csv::parse_double(row[c_t], where)] = csv::parse_double(row[c_v], where);
  }
  return values;
}

int cmd_evaluate(Context& ctx) {
  const auto& cfg = ctx.config;
  if (!cfg.has("truth") || !cfg.has("pred")) throw UsageError("evaluate needs --truth and --pred");
  const fs::path truth_path = cfg.get("truth");
  const fs::path pred_path = cfg.get("pred");
  ctx.inputs = {truth_path, pred_path};
  const auto truth = read_column(truth_path, cfg.get("truth_column"));
  const auto pred = read_column(pred_path, cfg.get("pred_column"));
  std::vector<double> y_true;
  std::vector<double> y_pred;
  for (const auto& [t, v] : truth) {
    if (const auto it = pred.find(t); it != pred.end()) {
      y_true.push_back(v);
      y_pred.push_back(it->second);
    }
  }
  const auto m = metrics(y_true, y_pred, cfg.get("label"));
  write_metrics_csv(out_dir(ctx) / "metrics.csv", {m});
  write_manifest(ctx, "evaluate");
  ctx.out << metrics_table({m});
  return kExitOk;
}

int cmd_synth(Context& ctx) {
  synth::Scenario scenario = synth::Scenario::benchmark();
  if (ctx.config.has("scenario")) {
    const fs::path p = ctx.config.get("scenario");
    scenario = synth::read_scenario(p);
    ctx.inputs.push_back(p);
  }
  if (ctx.config.is_explicit("seed")) scenario.seed = ctx.config.get_seed();
  const auto data = synth::generate(scenario);
  const fs::path dir = out_dir(ctx);
  ingest::write_records_csv(dir / "observations.csv", synth::to_records(data, scenario.year));
  synth::write_ground_truth_csv(dir / "ground_truth.csv", data);
  ingest::write_composite_csv(dir / "composite.csv", data.observations);
  std::ofstream(dir / "scenario.cfg", std::ios::binary) << synth::scenario_text(scenario);
  write_manifest(ctx, "synth");
  ctx.out << "wrote " << (dir / "observations.csv").string() << " and " << (dir / "ground_truth.csv").string()
          << '\n';
  return kExitOk;
}

struct Subcommand {
  const char* name;
  const char* help;
  std::vector<std::string> keys;
  int (*handler)(Context&);
};

const std::vector<std::string> kDataKeys = {"input", "composite", "years", "out"};
const std::vector<std::string> kTrainKeys = {"A",           "B",           "T_star",          "H_star",
                                             "alpha_min",   "alpha_max",   "n_data",          "n_colloc",
                                             "lambda_data", "lambda_ode",  "iterations",      "seed",
                                             "colloc_resample", "learning_rate", "final_learning_rate",
                                             "state_hidden", "alpha_hidden", "log_every",     "checkpoint"};

std::vector<std::string> join(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> list = {
      {"preprocess", "window and composite daily CSV files", kDataKeys, cmd_preprocess},
      {"prefit", "least-squares logistic fit of A and B",
       join(kDataKeys, {"prefit_start", "prefit_end", "fix_x0", "seed"}), cmd_prefit},
      {"train", "train the state and modulation networks", join(kDataKeys, kTrainKeys), cmd_train},
      {"verify", "back-solve the ODE with the inferred alpha",
       join(kDataKeys, {"checkpoint", "rk4_step", "m1", "m2"}), cmd_verify},
      {"forecast", "integrate forward from an initial value under a climate series",
       join(kDataKeys, {"checkpoint", "rk4_step", "x0", "horizon"}), cmd_forecast},
      {"evaluate", "MSE, MAE and R^2 between two CSV columns",
       {"truth", "pred", "truth_column", "pred_column", "label", "out"}, cmd_evaluate},
      {"synth", "generate a synthetic dataset with known alpha", {"scenario", "seed", "out"}, cmd_synth},
  };
  return list;
}

std::string single_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int fail(std::ostream& err, const char* kind, int code, const std::string& reason) {
  err << "pcmnn: error kind=" << kind << " code=" << code << ": " << single_line(reason) << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Climate-modulated logistic PINN toolkit for pest population data", "pcmnn"};
  app.require_subcommand(1);
  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, std::string> config_files;
  for (const auto& sc : subcommands()) {
    auto* sub = app.add_subcommand(sc.name, sc.help);
    sub->add_option("--config", config_files[sc.name], "key=value config file");
    for (const auto& key : sc.keys) {
      const auto& meta = *std::find_if(config_keys().begin(), config_keys().end(),
                                       [&](const ConfigKey& k) { return k.name == key; });
      std::string help = meta.help;
      if (!meta.default_value.empty()) help += " [" + meta.default_value + "]";
      sub->add_option_function<std::string>(
          "--" + key, [&flag_values, name = std::string(sc.name), key](const std::string& v) {
            flag_values[name][key] = v;
          },
          help);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << app.help();
    return fail(err, "usage", kExitUsage, e.what());
  }

  const auto* chosen = app.get_subcommands().front();
  const auto& sc = *std::find_if(subcommands().begin(), subcommands().end(),
                                 [&](const Subcommand& s) { return chosen->get_name() == s.name; });
  Context ctx{RunConfig{}, {}, out, err};
  try {
    if (!config_files[sc.name].empty()) ctx.config.load_file(config_files[sc.name]);
    ctx.config.apply_environment();
    for (const auto& [key, value] : flag_values[sc.name]) ctx.config.set(key, value);
    return sc.handler(ctx);
  } catch (const UsageError& e) {
    err << chosen->help();
    return fail(err, "usage", kExitUsage, e.what());
  } catch (const DataError& e) {
    return fail(err, "data", kExitData, e.what());
  } catch (const NumericalError& e) {
    return fail(err, "numerical", kExitNumerical, e.what());
  } catch (const std::domain_error& e) {
    return fail(err, "data", kExitData, e.what());
  } catch (const std::exception& e) {
    return fail(err, "numerical", kExitNumerical, e.what());
  }
}

}  // namespace pcmnn::cli
