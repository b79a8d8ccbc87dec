#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pcmnn/cli.hpp"
#include "pcmnn/dynamics.hpp"
#include "pcmnn/error.hpp"
#include "pcmnn/evaluate.hpp"
#include "pcmnn/ingest.hpp"
#include "pcmnn/pinn.hpp"
#include "pcmnn/prefit.hpp"
#include "pcmnn/synth.hpp"

namespace py = pybind11;
using namespace pcmnn;

namespace {

AlphaFunction as_alpha(const py::object& alpha) {
  if (alpha.is_none()) return constant_alpha(0.0);
  if (py::isinstance<py::float_>(alpha) || py::isinstance<py::int_>(alpha)) return constant_alpha(alpha.cast<double>());
  auto fn = alpha.cast<std::function<double(double, double, double)>>();
  return [fn](double T, double H, double t) {
    py::gil_scoped_acquire gil;
    return fn(T, H, t);
  };
}

}  // namespace

PYBIND11_MODULE(_pcmnn, m) {
  m.doc() = "Climate-modulated logistic growth with a physics-informed network";
  m.attr("__version__") = PCMNN_VERSION;

  auto usage = py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  (void)usage;

  // ingest
  py::class_<ingest::DailyRecord>(m, "DailyRecord")
      .def(py::init<>())
      .def_readwrite("year", &ingest::DailyRecord::year)
      .def_readwrite("month", &ingest::DailyRecord::month)
      .def_readwrite("day", &ingest::DailyRecord::day)
      .def_readwrite("doy", &ingest::DailyRecord::doy)
      .def_readwrite("male_count", &ingest::DailyRecord::male_count)
      .def_readwrite("temperature", &ingest::DailyRecord::temperature)
      .def_readwrite("humidity", &ingest::DailyRecord::humidity)
      .def("__repr__", [](const ingest::DailyRecord& r) {
        std::ostringstream os;
        os << "DailyRecord(" << r.year << "-" << r.month << "-" << r.day << ", count=" << r.male_count << ")";
        return os.str();
      });

  py::class_<ingest::CompositeSeries>(m, "CompositeSeries")
      .def(py::init<>())
      .def_readwrite("day_index", &ingest::CompositeSeries::day_index)
      .def_readwrite("population", &ingest::CompositeSeries::population)
      .def_readwrite("temperature", &ingest::CompositeSeries::temperature)
      .def_readwrite("humidity", &ingest::CompositeSeries::humidity)
      .def_readwrite("n_years", &ingest::CompositeSeries::n_years)
      .def("head", &ingest::CompositeSeries::head, py::arg("n"))
      .def("__len__", &ingest::CompositeSeries::size);

  m.def("load_csv", &ingest::load_csv, py::arg("path"));
  m.def("window", &ingest::window, py::arg("records"));
  m.def("years_of", &ingest::years_of, py::arg("records"));
  m.def(
      "composite",
      [](const std::vector<ingest::DailyRecord>& records, std::optional<std::set<int>> years) {
        return ingest::composite(records, years ? *years : ingest::years_of(records));
      },
      py::arg("records"), py::arg("years") = py::none());
  m.def("read_composite_csv", &ingest::read_composite_csv, py::arg("path"));
  m.def("write_composite_csv", &ingest::write_composite_csv, py::arg("path"), py::arg("series"));

  // dynamics
  py::class_<LogisticParams>(m, "LogisticParams")
      .def(py::init<>())
      .def(py::init([](double A, double B) {
             LogisticParams p;
             p.A = A;
             p.B = B;
             return p;
           }),
           py::arg("A"), py::arg("B"))
      .def_readwrite("A", &LogisticParams::A)
      .def_readwrite("B", &LogisticParams::B)
      .def_readwrite("T_star", &LogisticParams::T_star)
      .def_readwrite("H_star", &LogisticParams::H_star)
      .def_readwrite("alpha_min", &LogisticParams::alpha_min)
      .def_readwrite("alpha_max", &LogisticParams::alpha_max)
      .def("carrying_capacity", &LogisticParams::carrying_capacity);

  py::class_<Climate>(m, "Climate")
      .def(py::init<>())
      .def(py::init([](std::vector<double> T, std::vector<double> H) {
             Climate c;
             c.temperature = std::move(T);
             c.humidity = std::move(H);
             return c;
           }),
           py::arg("temperature"), py::arg("humidity"))
      .def_static("constant", &Climate::constant, py::arg("temperature"), py::arg("humidity"), py::arg("days"))
      .def_readwrite("temperature", &Climate::temperature)
      .def_readwrite("humidity", &Climate::humidity)
      .def("at", &Climate::at, py::arg("t_day"))
      .def("__len__", &Climate::size);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("t", &Trajectory::t)
      .def_readonly("x", &Trajectory::x)
      .def_readonly("clip_count", &Trajectory::clip_count);

  m.def("logistic_closed_form", &logistic_closed_form, py::arg("params"), py::arg("x0"), py::arg("t"));
  m.def(
      "integrate_rk4",
      [](const LogisticParams& params, const py::object& alpha, double x0, const Climate& climate,
         const std::vector<double>& t_grid, double step) {
        return integrate_rk4(params, as_alpha(alpha), x0, climate, t_grid, Rk4Options{step});
      },
      py::arg("params"), py::arg("alpha"), py::arg("x0"), py::arg("climate"), py::arg("t_grid"),
      py::arg("step") = 0.01,
      "alpha is None, a number, or a callable (temperature, humidity, t_day) -> float");

  // prefit
  py::class_<PrefitOptions>(m, "PrefitOptions")
      .def(py::init<>())
      .def_readwrite("day_start", &PrefitOptions::day_start)
      .def_readwrite("day_end", &PrefitOptions::day_end)
      .def_readwrite("fix_x0", &PrefitOptions::fix_x0)
      .def_readwrite("max_iterations", &PrefitOptions::max_iterations)
      .def_readwrite("tolerance", &PrefitOptions::tolerance)
      .def_readwrite("extra_starts", &PrefitOptions::extra_starts)
      .def_readwrite("seed", &PrefitOptions::seed);

  py::class_<PrefitResult>(m, "PrefitResult")
      .def_readonly("A_hat", &PrefitResult::A_hat)
      .def_readonly("B_hat", &PrefitResult::B_hat)
      .def_readonly("x0_hat", &PrefitResult::x0_hat)
      .def_readonly("sse", &PrefitResult::sse)
      .def_readonly("iterations", &PrefitResult::iterations)
      .def_readonly("converged", &PrefitResult::converged)
      .def_readonly("ill_conditioned", &PrefitResult::ill_conditioned)
      .def_readonly("n_points", &PrefitResult::n_points)
      .def_readonly("message", &PrefitResult::message)
      .def("carrying_capacity", &PrefitResult::carrying_capacity)
      .def("__str__", &PrefitResult::to_text);

  m.def(
      "fit_logistic",
      [](const ingest::CompositeSeries& series, const PrefitOptions& options) { return fit_logistic(series, options); },
      py::arg("series"), py::arg("options") = PrefitOptions{});
  m.def(
      "fit_logistic",
      [](const std::vector<double>& t, const std::vector<double>& x, const PrefitOptions& options) {
        return fit_logistic(t, x, options);
      },
      py::arg("t"), py::arg("x"), py::arg("options") = PrefitOptions{});

  // evaluate
  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("label", &MetricsReport::label)
      .def_readonly("n", &MetricsReport::n)
      .def_readonly("mse", &MetricsReport::mse)
      .def_readonly("mae", &MetricsReport::mae)
      .def_readonly("r2", &MetricsReport::r2);

  m.def(
      "metrics",
      [](const std::vector<double>& y_true, const std::vector<double>& y_pred, const std::string& label) {
        return metrics(y_true, y_pred, label);
      },
      py::arg("y_true"), py::arg("y_pred"), py::arg("label") = "");
  m.def(
      "sup_relative_gap",
      [](const std::vector<double>& a, const std::vector<double>& b) { return sup_relative_gap(a, b); },
      py::arg("a"), py::arg("b"));

  // synth
  py::class_<synth::Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_static("benchmark", &synth::Scenario::benchmark)
      .def_static("parse", &synth::parse_scenario, py::arg("text"))
      .def_readwrite("params", &synth::Scenario::params)
      .def_readwrite("alpha_amplitude", &synth::Scenario::alpha_amplitude)
      .def_readwrite("alpha_period", &synth::Scenario::alpha_period)
      .def_readwrite("temp_c", &synth::Scenario::temp_c)
      .def_readwrite("rh_pct", &synth::Scenario::rh_pct)
      .def_readwrite("x0", &synth::Scenario::x0)
      .def_readwrite("noise_sd", &synth::Scenario::noise_sd)
      .def_readwrite("seed", &synth::Scenario::seed)
      .def_readwrite("days", &synth::Scenario::days)
      .def("climate", &synth::Scenario::climate)
      .def("__str__", &synth::scenario_text);

  py::class_<synth::GroundTruth>(m, "GroundTruth")
      .def_readonly("t_day", &synth::GroundTruth::t_day)
      .def_readonly("x_true", &synth::GroundTruth::x_true)
      .def_readonly("alpha_true", &synth::GroundTruth::alpha_true)
      .def_readonly("climate", &synth::GroundTruth::climate);

  py::class_<synth::Dataset>(m, "Dataset")
      .def_readonly("observations", &synth::Dataset::observations)
      .def_readonly("truth", &synth::Dataset::truth);

  m.def("generate", &synth::generate, py::arg("scenario") = synth::Scenario::benchmark());

  // pinn
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("n_data", &TrainConfig::n_data)
      .def_readwrite("n_colloc", &TrainConfig::n_colloc)
      .def_readwrite("lambda_data", &TrainConfig::lambda_data)
      .def_readwrite("lambda_ode", &TrainConfig::lambda_ode)
      .def_readwrite("iterations", &TrainConfig::iterations)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("colloc_resample", &TrainConfig::colloc_resample)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("final_learning_rate", &TrainConfig::final_learning_rate)
      .def_readwrite("state_hidden", &TrainConfig::state_hidden)
      .def_readwrite("alpha_hidden", &TrainConfig::alpha_hidden);

  py::class_<TrainState>(m, "TrainState")
      .def_readonly("config", &TrainState::config)
      .def_readonly("params", &TrainState::params)
      .def_readonly("iteration", &TrainState::iteration)
      .def_readonly("warnings", &TrainState::warnings)
      .def_property_readonly("loss_history",
                             [](const TrainState& s) {
                               std::vector<std::tuple<double, double, double>> out;
                               out.reserve(s.loss_history.size());
                               for (const auto& r : s.loss_history) out.emplace_back(r.data, r.ode, r.total);
                               return out;
                             })
      .def("population_at", &TrainState::population_at, py::arg("t_day"))
      .def("alpha_at", &TrainState::alpha_at, py::arg("temperature"), py::arg("humidity"), py::arg("t_day"));

  py::class_<AlphaSeries>(m, "AlphaSeries")
      .def_readonly("t_day", &AlphaSeries::t_day)
      .def_readonly("alpha", &AlphaSeries::alpha)
      .def_readonly("growth_threshold", &AlphaSeries::growth_threshold)
      .def_readonly("baseline", &AlphaSeries::baseline);

  m.def(
      "train",
      [](const ingest::CompositeSeries& series, const LogisticParams& params, const TrainConfig& config) {
        py::gil_scoped_release release;
        return train(series, params, config);
      },
      py::arg("series"), py::arg("params") = LogisticParams{}, py::arg("config") = TrainConfig{});
  m.def("extract_alpha", &extract_alpha, py::arg("state"), py::arg("climate"), py::arg("grid"));
  m.def("climate_of", &climate_of, py::arg("series"));
  m.def(
      "verify_backsolve",
      [](const TrainState& trained, const LogisticParams& params, const ingest::CompositeSeries& series,
         const Climate& climate, double step) {
        auto r = verify_backsolve(trained, params, series, climate, Rk4Options{step});
        return py::make_tuple(r.trajectory, r.metrics, r.warnings);
      },
      py::arg("state"), py::arg("params"), py::arg("series"), py::arg("climate"), py::arg("step") = 0.01);
  m.def(
      "forecast",
      [](const TrainState& trained, const LogisticParams& params, double x0, const Climate& climate, int horizon,
         double step) { return forecast(trained, params, x0, climate, horizon, Rk4Options{step}); },
      py::arg("state"), py::arg("params"), py::arg("x0"), py::arg("climate"), py::arg("horizon_days"),
      py::arg("step") = 0.01);
  m.def(
      "write_checkpoint",
      [](const std::filesystem::path& path, const TrainState& state) { write_checkpoint(path, state); },
      py::arg("path"), py::arg("state"));
  m.def(
      "read_checkpoint", [](const std::filesystem::path& path) { return read_checkpoint(path); }, py::arg("path"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> argv{"pcmnn"};
        argv.insert(argv.end(), args.begin(), args.end());
        std::ostringstream out;
        std::ostringstream err;
        int code = cli::run(argv, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a CLI command; returns (exit_code, stdout, stderr).");
}
