#include "pcmnn/prefit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pcmnn/csv.hpp"
#include "pcmnn/error.hpp"
#include "pcmnn/random.hpp"

namespace pcmnn {

namespace {

struct Model {
  const std::vector<double>& t;
  const std::vector<double>& x;
  bool fix_x0;

  static double predict(double A, double B, double x0, double t) {
    const double K = A / B;
    return K / (1.0 + (K - x0) / x0 * std::exp(-A * t));
  }

  // Columns: A, B and (unless fixed) x0.
  Eigen::MatrixXd jacobian(const Eigen::Vector3d& p) const {
    const double A = p[0];
    const double B = p[1];
    const double x0 = p[2];
    const double K = A / B;
    const double c = K / x0 - 1.0;
    Eigen::MatrixXd J(t.size(), fix_x0 ? 2 : 3);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double E = std::exp(-A * t[i]);
      const double D = 1.0 + c * E;
      const double dK = 1.0 / D - K * E / (x0 * D * D);
      const double dA_direct = K * c * t[i] * E / (D * D);
      const auto row = static_cast<Eigen::Index>(i);
      J(row, 0) = dA_direct + dK / B;
      J(row, 1) = -dK * A / (B * B);
      if (!fix_x0) J(row, 2) = K * K * E / (x0 * x0 * D * D);
    }
    return J;
  }

  Eigen::VectorXd residuals(const Eigen::Vector3d& p) const {
    Eigen::VectorXd r(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) r(static_cast<Eigen::Index>(i)) = x[i] - predict(p[0], p[1], p[2], t[i]);
    return r;
  }

  double sse(const Eigen::Vector3d& p) const {
    if (!(p[0] > 0.0 && p[1] > 0.0 && p[2] > 0.0)) return std::numeric_limits<double>::infinity();
    const double s = residuals(p).squaredNorm();
    return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
  }
};

struct LocalFit {
  Eigen::Vector3d p;
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;
};

LocalFit levenberg_marquardt(const Model& model, Eigen::Vector3d p, const PrefitOptions& opt) {
  LocalFit fit;
  double sse = model.sse(p);
  double lambda = opt.initial_damping;
  const int n_free = model.fix_x0 ? 2 : 3;
  for (int iter = 0; iter < opt.max_iterations && std::isfinite(sse); ++iter) {
    fit.iterations = iter + 1;
    if (sse == 0.0) {
      fit.converged = true;
      break;
    }
    const Eigen::MatrixXd J = model.jacobian(p);
    const Eigen::VectorXd r = model.residuals(p);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd Jtr = J.transpose() * r;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd lhs = JtJ;
      for (int k = 0; k < n_free; ++k) lhs(k, k) += lambda * std::max(JtJ(k, k), 1e-300);
      const Eigen::VectorXd delta = lhs.ldlt().solve(Jtr);
      Eigen::Vector3d trial = p;
      trial.head(n_free) += delta;
      const double trial_sse = model.sse(trial);
      if (trial_sse < sse) {
        const double improvement = (sse - trial_sse) / sse;
        p = trial;
        sse = trial_sse;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (improvement < opt.tolerance) fit.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent direction left at any damping: a stationary point.
      fit.converged = true;
      break;
    }
    if (fit.converged) break;
  }
  fit.p = p;
  fit.sse = sse;
  return fit;
}

// Flags parameters whose doubling barely moves the curve, and near-collinear
// columns of the scaled Jacobian.
bool ill_conditioned(const Model& model, const Eigen::Vector3d& p) {
  const Eigen::MatrixXd J = model.jacobian(p);
  double fit_norm = 0.0;
  for (double ti : model.t) fit_norm += std::pow(Model::predict(p[0], p[1], p[2], ti), 2);
  fit_norm = std::sqrt(fit_norm);
  Eigen::MatrixXd scaled = J;
  for (Eigen::Index c = 0; c < J.cols(); ++c) {
    const double norm = J.col(c).norm();
    if (!(std::abs(p[c]) * norm > 1e-3 * fit_norm)) return true;
    scaled.col(c) /= norm;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
  const auto& s = svd.singularValues();
  return !(s(s.size() - 1) > 1e-6 * s(0));
}

}  // namespace

double logistic_sse(const std::vector<double>& t, const std::vector<double>& x, double A, double B, double x0) {
  const Model model{t, x, false};
  return model.sse(Eigen::Vector3d(A, B, x0));
}

PrefitResult fit_logistic(const std::vector<double>& t, const std::vector<double>& x, const PrefitOptions& options) {
  if (t.size() != x.size()) throw DataError("prefit: time and value lengths differ");
  if (t.size() < 4) throw DataError("prefit: need at least 4 points, got " + std::to_string(t.size()));
  const double x_max = *std::max_element(x.begin(), x.end());
  if (!(x_max > 0.0)) throw DataError("prefit: all observations are zero");
  double x_first = x.front();
  if (!(x_first > 0.0)) x_first = 1e-3 * x_max;

  const Model model{t, x, options.fix_x0};
  std::vector<Eigen::Vector3d> starts;
  for (double A : {0.1, 0.3, 0.5}) {
    for (double k : {0.5, 1.0, 2.0}) starts.emplace_back(A, A / (k * x_max), x_first);
  }
  Rng rng(options.seed);
  for (int i = 0; i < options.extra_starts; ++i) {
    const double A = rng.uniform(0.05, 1.0);
    const double K = rng.uniform(0.5, 2.0) * x_max;
    starts.emplace_back(A, A / K, x_first);
  }

  PrefitResult best;
  best.sse = std::numeric_limits<double>::infinity();
  best.n_points = static_cast<int>(t.size());
  bool any_finite = false;
  for (const auto& start : starts) {
    best.start_sse.push_back(model.sse(start));
    const LocalFit fit = levenberg_marquardt(model, start, options);
    if (!std::isfinite(fit.sse)) continue;
    any_finite = true;
    if (fit.sse < best.sse) {
      best.A_hat = fit.p[0];
      best.B_hat = fit.p[1];
      best.x0_hat = fit.p[2];
      best.sse = fit.sse;
      best.iterations = fit.iterations;
      best.converged = fit.converged;
    }
  }
  if (!any_finite) {
    best.converged = false;
    best.message = "all starts diverged";
    return best;
  }
  best.ill_conditioned = ill_conditioned(model, Eigen::Vector3d(best.A_hat, best.B_hat, best.x0_hat));
  if (best.ill_conditioned) {
    best.message = "near-singular Jacobian at the optimum; parameters are poorly identified";
  } else if (!best.converged) {
    best.message = "iteration limit reached";
  } else {
    best.message = "ok";
  }
  return best;
}

PrefitResult fit_logistic(const ingest::CompositeSeries& series, const PrefitOptions& options) {
  if (options.day_end < options.day_start) throw DataError("prefit: empty day range");
  std::vector<double> t;
  std::vector<double> x;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const int d = series.day_index[i];
    if (d < options.day_start || d > options.day_end) continue;
    t.push_back(static_cast<double>(d - options.day_start));
    x.push_back(series.population[i]);
  }
  if (t.empty() || series.day_index.front() > options.day_start || series.day_index.back() < options.day_end) {
    throw DataError("prefit: day range " + std::to_string(options.day_start) + ".." +
                    std::to_string(options.day_end) + " not inside the series");
  }
  PrefitResult result = fit_logistic(t, x, options);
  result.day_start = options.day_start;
  return result;
}

std::string PrefitResult::to_text() const {
  std::ostringstream os;
  os << "A_hat=" << csv::format_double(A_hat) << '\n'
     << "B_hat=" << csv::format_double(B_hat) << '\n'
     << "K_hat=" << csv::format_double(carrying_capacity()) << '\n'
     << "x0_hat=" << csv::format_double(x0_hat) << '\n'
     << "sse=" << csv::format_double(sse) << '\n'
     << "n_points=" << n_points << '\n'
     << "iterations=" << iterations << '\n'
     << "converged=" << (converged ? "true" : "false") << '\n'
     << "ill_conditioned=" << (ill_conditioned ? "true" : "false") << '\n'
     << "message=" << message << '\n';
  return os.str();
}

std::vector<std::string> prefit_csv_header() {
  return {"A_hat", "B_hat", "K_hat", "x0_hat", "sse", "iterations", "converged", "ill_conditioned"};
}

std::vector<std::string> prefit_csv_row(const PrefitResult& r) {
  return {csv::format_double(r.A_hat), csv::format_double(r.B_hat),     csv::format_double(r.carrying_capacity()),
          csv::format_double(r.x0_hat), csv::format_double(r.sse),      std::to_string(r.iterations),
          r.converged ? "1" : "0",      r.ill_conditioned ? "1" : "0"};
}

void write_prefit_curve_csv(const std::filesystem::path& path, const ingest::CompositeSeries& series,
                            const PrefitResult& result) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = static_cast<double>(series.day_index[i] - result.day_start);
    std::string fit = "";
    if (t >= 0.0) fit = csv::format_double(Model::predict(result.A_hat, result.B_hat, result.x0_hat, t));
    rows.push_back({std::to_string(series.day_index[i]), csv::format_double(series.population[i]), fit});
  }
  csv::write(path, {"t_day", "x_obs", "x_fit"}, rows);
}

}  // namespace pcmnn
