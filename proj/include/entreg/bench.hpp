#pragma once

// Experiment harness: turn a declarative config into simulated data, run the
// configured solvers per dimension, score against ground truth, aggregate.

#include <entreg/basis.hpp>
#include <entreg/dynamics.hpp>
#include <entreg/er.hpp>
#include <entreg/solvers.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace entreg {

enum class SystemKind { lorenz, kse, double_well, logistic_net, custom_csv };

inline const char* system_name(SystemKind k) {
  switch (k) {
    case SystemKind::lorenz: return "lorenz";
    case SystemKind::kse: return "kse";
    case SystemKind::double_well: return "double_well";
    case SystemKind::logistic_net: return "logistic_net";
    case SystemKind::custom_csv: return "custom_csv";
  }
  return "?";
}

inline SystemKind system_from_name(const std::string& s) {
  for (SystemKind k : {SystemKind::lorenz, SystemKind::kse,
                       SystemKind::double_well, SystemKind::logistic_net,
                       SystemKind::custom_csv})
    if (s == system_name(k)) return k;
  throw std::invalid_argument("unknown system: " + s);
}

// One flat record; each system reads the fields that concern it.
struct SystemParams {
  // shared integration / recording controls
  double dt = 0.0005;
  int sample_stride = 1;  // record every stride-th integration step
  int burn_in = 0;        // integration steps (map iterations) discarded first

  // lorenz
  double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
  std::vector<double> x0;   // initial condition; system default when empty
  double x0_jitter = 0.0;   // per-run uniform perturbation half-width

  // kse modes
  double nu = 0.029910;
  int n_modes = 16;
  double init_scale = 0.1;  // per-run random initial mode amplitude

  // logistic network
  int n_nodes = 20;
  double a = 4.0, k = 0.2;
  int edges = 38;
  std::uint64_t adjacency_seed = 99;

  // double well
  double lo = -1.2, hi = 1.2, outlier_x = 0.52, outlier_value = 0.5;

  // custom_csv
  std::string csv_path;
};

struct SolverSpec {
  SolverId id = SolverId::er;
  std::optional<double> lambda;     // lasso / sindy / tw inner threshold
  std::optional<double> epsilon;    // cs constraint radius
  std::optional<double> threshold;  // ols residual stop; absent -> cross-validated
  std::optional<double> mu;         // tw trimming weight
  std::optional<double> tw_tol;     // tw outer convergence
  ErConfig er;                      // er settings; seed is overridden per run
};

struct ExperimentConfig {
  SystemKind system = SystemKind::lorenz;
  SystemParams params;
  int basis_degree = 5;
  int n_samples = 1500;  // aligned rows of the inverse problem
  NoiseModel noise;      // seed field ignored; per-run seeds are derived
  DerivScheme derivative_scheme = DerivScheme::central;
  std::vector<SolverSpec> solvers;
  int n_runs = 20;
  std::uint64_t seed = 0;
  bool keep_traces = false;
};

// Map systems regress next states on current states; the rest differentiate.
inline bool is_map_system(SystemKind k) { return k == SystemKind::logistic_net; }

inline DerivScheme effective_scheme(const ExperimentConfig& cfg) {
  return is_map_system(cfg.system) ? DerivScheme::map : cfg.derivative_scheme;
}

// Rows lost at the boundary when turning recorded states into (state, target)
// pairs.
inline int alignment_pad(const ExperimentConfig& cfg) {
  if (cfg.system == SystemKind::double_well) return 0;
  switch (effective_scheme(cfg)) {
    case DerivScheme::central: return 2;
    case DerivScheme::forward: return 1;
    case DerivScheme::map: return 1;
  }
  return 0;
}

inline void validate_config(const ExperimentConfig& cfg,
                            bool custom_data_provided = false) {
  if (cfg.n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  if (cfg.basis_degree < 1)
    throw std::invalid_argument("basis_degree must be >= 1");
  if (cfg.system != SystemKind::custom_csv && cfg.n_samples < 1)
    throw std::invalid_argument("n_samples must be >= 1");
  if (cfg.solvers.empty())
    throw std::invalid_argument("at least one solver must be configured");
  if (cfg.params.sample_stride < 1)
    throw std::invalid_argument("sample_stride must be >= 1");
  if (cfg.params.burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
  if (cfg.noise.eps1 < 0 || cfg.noise.eps2 < 0 || cfg.noise.p < 0 ||
      cfg.noise.p > 1)
    throw std::invalid_argument("noise: eps1, eps2 >= 0 and p in [0,1]");

  switch (cfg.system) {
    case SystemKind::lorenz:
      if (cfg.params.dt <= 0) throw std::invalid_argument("dt must be > 0");
      if (!cfg.params.x0.empty() && cfg.params.x0.size() != 3)
        throw std::invalid_argument("lorenz x0 must have 3 entries");
      break;
    case SystemKind::kse:
      if (cfg.params.dt <= 0) throw std::invalid_argument("dt must be > 0");
      if (cfg.params.n_modes < 1)
        throw std::invalid_argument("n_modes must be >= 1");
      if (cfg.basis_degree != 2)
        throw std::invalid_argument(
            "kse ground truth is quadratic; set basis_degree = 2");
      if (!cfg.params.x0.empty() &&
          static_cast<int>(cfg.params.x0.size()) != cfg.params.n_modes)
        throw std::invalid_argument("kse x0 must have n_modes entries");
      break;
    case SystemKind::double_well:
      if (cfg.n_samples < 2)
        throw std::invalid_argument("double_well needs n_samples >= 2");
      break;
    case SystemKind::logistic_net:
      if (cfg.basis_degree != 2)
        throw std::invalid_argument(
            "logistic_net ground truth is quadratic; set basis_degree = 2");
      if (cfg.params.sample_stride != 1)
        throw std::invalid_argument(
            "map systems must record every iteration (sample_stride = 1)");
      break;
    case SystemKind::custom_csv:
      if (!custom_data_provided && cfg.params.csv_path.empty())
        throw std::invalid_argument("custom_csv requires csv_path");
      break;
  }
  if (is_map_system(cfg.system) && cfg.derivative_scheme != DerivScheme::map &&
      cfg.derivative_scheme != DerivScheme::central) {
    // central is the schema default; anything else explicit is a mistake
    throw std::invalid_argument("map systems ignore derivative_scheme");
  }
  if (!is_map_system(cfg.system) && cfg.system != SystemKind::custom_csv &&
      cfg.derivative_scheme == DerivScheme::map)
    throw std::invalid_argument(
        "map targets are only meaningful for map systems or custom data");
  const int pad = alignment_pad(cfg);
  if (cfg.system != SystemKind::custom_csv && cfg.n_samples + pad < 3)
    throw std::invalid_argument("too few samples for the derivative scheme");
}

inline std::optional<GroundTruth> ground_truth_for(const ExperimentConfig& cfg) {
  switch (cfg.system) {
    case SystemKind::lorenz:
      return lorenz_ground_truth(cfg.params.sigma, cfg.params.rho,
                                 cfg.params.beta, cfg.basis_degree);
    case SystemKind::kse:
      return kse_ground_truth(cfg.params.nu, cfg.params.n_modes);
    case SystemKind::double_well:
      return double_well_ground_truth(cfg.basis_degree);
    case SystemKind::logistic_net: {
      const auto adj = make_random_adjacency(cfg.params.n_nodes, cfg.params.edges,
                                             cfg.params.adjacency_seed);
      return logistic_ground_truth(cfg.params.n_nodes, cfg.params.a,
                                   cfg.params.k, adj);
    }
    case SystemKind::custom_csv: return std::nullopt;
  }
  return std::nullopt;
}

struct RunProblem {
  BasisMatrix phi;
  Eigen::MatrixXd f;                // aligned targets, one column per dimension
  Eigen::MatrixXd recorded_states;  // noisy observations before alignment
  Eigen::VectorXd recorded_times;
  Eigen::VectorXd x0;               // initial condition actually used
  double dt_recorded = 0.0;
  int rows_recorded = 0;
};

namespace detail {

inline TimeSeriesSet subsample(const TimeSeriesSet& ts, int first, int stride,
                               int rows) {
  TimeSeriesSet out;
  out.dt = ts.dt * stride;
  out.times.resize(rows);
  out.states.resize(rows, ts.states.cols());
  for (int i = 0; i < rows; ++i) {
    const int t = first + stride * i;
    out.times[i] = ts.times[t];
    out.states.row(i) = ts.states.row(t);
  }
  return out;
}

// Gaussian measurement noise plus occasional whole-sample outliers, matching
// the trajectory noise model but applied to a scalar target.
inline void corrupt_vector(Eigen::VectorXd& v, const NoiseModel& m) {
  if (m.eps1 == 0.0 && (m.eps2 == 0.0 || m.p == 0.0)) return;
  Rng rng(m.seed);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (m.eps1 > 0.0) v[i] += m.eps1 * rng.normal();
    if (m.p > 0.0 && rng.uniform() < m.p) v[i] += m.eps2 * rng.normal();
  }
}

}  // namespace detail

inline RunProblem make_problem(const ExperimentConfig& cfg,
                               std::uint64_t run_seed,
                               const TimeSeriesSet* custom_data = nullptr) {
  RunProblem out;
  const int pad = alignment_pad(cfg);

  if (cfg.system == SystemKind::double_well) {
    auto d = make_double_well(cfg.n_samples, cfg.params.lo, cfg.params.hi,
                              cfg.params.outlier_x, cfg.params.outlier_value);
    NoiseModel nm = cfg.noise;
    nm.seed = derive_seed(run_seed, 1);
    detail::corrupt_vector(d.target, nm);
    out.phi = build_basis_matrix(d.states, cfg.basis_degree);
    out.f = d.target;
    out.recorded_states = d.states;
    out.recorded_times = Eigen::VectorXd::LinSpaced(cfg.n_samples, 0.0,
                                                    cfg.n_samples - 1.0);
    out.x0 = d.states.row(0);
    out.rows_recorded = cfg.n_samples;
    return out;
  }

  TimeSeriesSet recorded;
  if (cfg.system == SystemKind::custom_csv) {
    if (!custom_data)
      throw std::invalid_argument("custom_csv data was not provided");
    recorded = *custom_data;
  } else {
    const int rows = cfg.n_samples + pad;
    Rng sim_rng(derive_seed(run_seed, 0));
    TimeSeriesSet raw;
    if (cfg.system == SystemKind::lorenz) {
      Eigen::Vector3d z0(1.0, 1.0, 1.0);
      if (!cfg.params.x0.empty())
        for (int i = 0; i < 3; ++i) z0[i] = cfg.params.x0[i];
      for (int i = 0; i < 3; ++i)
        z0[i] += cfg.params.x0_jitter * (2.0 * sim_rng.uniform() - 1.0);
      const int steps =
          cfg.params.burn_in + cfg.params.sample_stride * (rows - 1);
      raw = simulate_lorenz(cfg.params.sigma, cfg.params.rho, cfg.params.beta,
                            z0, cfg.params.dt, steps);
      out.x0 = z0;
    } else if (cfg.system == SystemKind::kse) {
      Eigen::VectorXd a0(cfg.params.n_modes);
      if (!cfg.params.x0.empty()) {
        for (int i = 0; i < cfg.params.n_modes; ++i) a0[i] = cfg.params.x0[i];
      } else {
        for (int i = 0; i < cfg.params.n_modes; ++i)
          a0[i] = cfg.params.init_scale * (2.0 * sim_rng.uniform() - 1.0);
      }
      const int steps =
          cfg.params.burn_in + cfg.params.sample_stride * (rows - 1);
      raw = simulate_kse_modes(cfg.params.nu, cfg.params.n_modes, a0,
                               cfg.params.dt, steps);
      out.x0 = a0;
    } else {  // logistic_net
      const auto adj = make_random_adjacency(cfg.params.n_nodes, cfg.params.edges,
                                             cfg.params.adjacency_seed);
      Eigen::VectorXd x0(cfg.params.n_nodes);
      for (int i = 0; i < cfg.params.n_nodes; ++i)
        x0[i] = 0.05 + 0.9 * sim_rng.uniform();
      const int steps = cfg.params.burn_in + rows - 1;
      raw = simulate_logistic_network(cfg.params.n_nodes, cfg.params.a,
                                      cfg.params.k, adj, x0, steps);
      out.x0 = x0;
    }
    recorded = detail::subsample(raw, cfg.params.burn_in,
                                 cfg.params.sample_stride, rows);
  }

  NoiseModel nm = cfg.noise;
  nm.seed = derive_seed(run_seed, 1);
  TimeSeriesSet observed = inject_noise(recorded, nm);

  auto dd = estimate_derivatives(observed, effective_scheme(cfg));
  out.phi = build_basis_matrix(dd.aligned.states, cfg.basis_degree);
  out.f = dd.f;
  out.recorded_states = observed.states;
  out.recorded_times = observed.times;
  out.dt_recorded = observed.dt;
  out.rows_recorded = static_cast<int>(observed.n_samples());
  return out;
}

// --- solver dispatch ------------------------------------------------------

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double la = std::log10(lo), lb = std::log10(hi);
  for (int i = 0; i < n; ++i)
    g[i] = std::pow(10.0, la + (lb - la) * i / (n - 1));
  return g;
}

inline std::string join_grid(const std::vector<double>& g) {
  std::string s;
  char buf[32];
  for (size_t i = 0; i < g.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", g[i]);
    if (i) s += ",";
    s += buf;
  }
  return s;
}

inline SparseSolution solve_lasso_cv(const Eigen::MatrixXd& phi,
                                     const Eigen::VectorXd& f) {
  double lmax = 0.0;
  for (Eigen::Index j = 0; j < phi.cols(); ++j)
    lmax = std::max(lmax, std::abs(phi.col(j).dot(f)));
  lmax *= 2.0;
  if (lmax == 0.0) return solve_lasso(phi, f, 0.0);
  std::vector<double> grid(10);
  for (int i = 0; i < 10; ++i) grid[i] = lmax * std::pow(1e-4, i / 9.0);
  const double chosen = cross_validate_min_residual(
      phi, f, 5, grid, [](const Eigen::MatrixXd& p, const Eigen::VectorXd& y,
                          double l) { return solve_lasso(p, y, l).coefficients; });
  SparseSolution sol = solve_lasso(phi, f, chosen);
  sol.hyperparams["cv_folds"] = "5";
  sol.hyperparams["cv_grid"] = join_grid(grid);
  return sol;
}

inline SparseSolution solve_cs_cv(const Eigen::MatrixXd& phi,
                                  const Eigen::VectorXd& f) {
  const double r0 = solve_ls(phi, f).residual_norm;
  if (r0 <= 1e-12) return solve_cs(phi, f, 0.0);
  std::vector<double> grid = log_grid(2.0 * r0, 0.2 * r0, 10);
  const double chosen = cross_validate_min_residual(
      phi, f, 5, grid, [](const Eigen::MatrixXd& p, const Eigen::VectorXd& y,
                          double e) { return solve_cs(p, y, e).coefficients; });
  SparseSolution sol = solve_cs(phi, f, chosen);
  sol.hyperparams["cv_folds"] = "5";
  sol.hyperparams["cv_grid"] = join_grid(grid);
  return sol;
}

}  // namespace detail

// Fit one dimension with one configured solver. `seed` feeds stochastic
// solvers (currently only the entropic search).
inline std::pair<SparseSolution, std::optional<ErTrace>> fit_one(
    const SolverSpec& spec, const Eigen::MatrixXd& phi, const Eigen::VectorXd& f,
    std::uint64_t seed) {
  switch (spec.id) {
    case SolverId::ls: return {solve_ls(phi, f), std::nullopt};
    case SolverId::ols:
      if (spec.threshold) return {solve_ols(phi, f, *spec.threshold), std::nullopt};
      return {solve_ols_cv(phi, f,
                           CrossValidationPlan{5, detail::log_grid(1e-6, 100.0, 50)}),
              std::nullopt};
    case SolverId::lasso:
      if (spec.lambda) return {solve_lasso(phi, f, *spec.lambda), std::nullopt};
      return {detail::solve_lasso_cv(phi, f), std::nullopt};
    case SolverId::cs:
      if (spec.epsilon) return {solve_cs(phi, f, *spec.epsilon), std::nullopt};
      return {detail::solve_cs_cv(phi, f), std::nullopt};
    case SolverId::sindy:
      return {solve_sindy(phi, f, spec.lambda.value_or(0.02)), std::nullopt};
    case SolverId::tw:
      return {solve_tw(phi, f, spec.lambda.value_or(0.1), spec.mu.value_or(2.0),
                       spec.tw_tol.value_or(1e-6)),
              std::nullopt};
    case SolverId::er: {
      ErConfig c = spec.er;
      c.seed = seed;
      auto [sol, trace] = entropic_regression(phi, f, c);
      return {std::move(sol), std::move(trace)};
    }
  }
  throw std::invalid_argument("unknown solver");
}

// --- scoring and aggregation ----------------------------------------------

inline std::pair<double, bool> score_solution(
    const GroundTruth& truth, const std::vector<SparseSolution>& per_dim) {
  if (per_dim.size() != truth.support.size())
    throw std::invalid_argument("dimension count mismatch against ground truth");
  double sq = 0.0;
  bool exact = true;
  for (size_t dim = 0; dim < per_dim.size(); ++dim) {
    if (per_dim[dim].coefficients.size() != truth.coefficients.rows())
      throw std::invalid_argument("basis size mismatch against ground truth");
    sq += (per_dim[dim].coefficients -
           truth.coefficients.col(static_cast<Eigen::Index>(dim)))
              .squaredNorm();
    exact = exact && per_dim[dim].support == truth.support[dim];
  }
  return {std::sqrt(sq), exact};
}

struct RunRecord {
  int run = 0;
  SolverId solver = SolverId::ls;
  std::uint64_t seed = 0;  // run seed
  double parameter_error = std::numeric_limits<double>::quiet_NaN();
  bool exact_recovery = false;
  double wall_time_ms = 0.0;
  bool failed = false;
  std::string error;
  std::vector<std::vector<int>> support_found;  // per dimension
  std::vector<SparseSolution> solutions;        // per dimension
  std::vector<ErTrace> traces;                  // per dimension, when kept
};

struct SolverAggregate {
  SolverId solver = SolverId::ls;
  double median_error = std::numeric_limits<double>::quiet_NaN();
  double q1_error = std::numeric_limits<double>::quiet_NaN();
  double q3_error = std::numeric_limits<double>::quiet_NaN();
  double exact_rate = 0.0;
  double median_wall_time_ms = 0.0;
  int n_failed = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  bool scored = false;
  int rows_recorded = 0;
  int rows_aligned = 0;
  std::vector<RunRecord> runs;              // run-major, solvers in config order
  std::vector<SolverAggregate> aggregates;  // solvers in config order
};

// Quantile with linear interpolation between order statistics.
inline double quantile_linear(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - lo) * (v[lo + 1] - v[lo]);
}

inline std::vector<SolverAggregate> aggregate_records(
    const std::vector<SolverSpec>& solvers, const std::vector<RunRecord>& runs,
    int n_runs) {
  // Records are laid out run-major with one slot per configured solver, and
  // the same solver may appear in several slots (e.g. a hyperparameter grid),
  // so aggregation walks slot positions rather than matching on solver id.
  std::vector<SolverAggregate> out;
  const size_t S = solvers.size();
  for (size_t s = 0; s < S; ++s) {
    SolverAggregate agg;
    agg.solver = solvers[s].id;
    std::vector<double> errors, times;
    int exact = 0;
    for (size_t r = 0; r * S + s < runs.size(); ++r) {
      const auto& rec = runs[r * S + s];
      if (rec.failed) {
        ++agg.n_failed;
        continue;
      }
      if (std::isfinite(rec.parameter_error))
        errors.push_back(rec.parameter_error);
      times.push_back(rec.wall_time_ms);
      exact += rec.exact_recovery;
    }
    agg.median_error = quantile_linear(errors, 0.5);
    agg.q1_error = quantile_linear(errors, 0.25);
    agg.q3_error = quantile_linear(errors, 0.75);
    agg.exact_rate = n_runs > 0 ? static_cast<double>(exact) / n_runs : 0.0;
    agg.median_wall_time_ms = quantile_linear(times, 0.5);
    out.push_back(std::move(agg));
  }
  return out;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       const TimeSeriesSet* custom_data = nullptr) {
  validate_config(cfg, custom_data != nullptr);
  const auto gt = ground_truth_for(cfg);
  const int S = static_cast<int>(cfg.solvers.size());

  ExperimentReport report;
  report.config = cfg;
  report.scored = gt.has_value();
  report.runs.resize(static_cast<size_t>(cfg.n_runs) * S);

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r = next.fetch_add(1); r < cfg.n_runs; r = next.fetch_add(1)) {
      const std::uint64_t run_seed = derive_seed(cfg.seed, r);
      RunProblem prob;
      std::string problem_error;
      try {
        prob = make_problem(cfg, run_seed, custom_data);
      } catch (const std::exception& e) {
        problem_error = e.what();
      }
      for (int s = 0; s < S; ++s) {
        RunRecord rec;
        rec.run = r;
        rec.solver = cfg.solvers[s].id;
        rec.seed = run_seed;
        if (!problem_error.empty()) {
          rec.failed = true;
          rec.error = "data generation: " + problem_error;
          report.runs[static_cast<size_t>(r) * S + s] = std::move(rec);
          continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        try {
          std::vector<SparseSolution> sols;
          for (int dim = 0; dim < prob.f.cols(); ++dim) {
            auto [sol, trace] =
                fit_one(cfg.solvers[s], prob.phi.values, prob.f.col(dim),
                        derive_seed(run_seed, 100 + static_cast<std::uint64_t>(s) *
                                                        32 +
                                                    static_cast<std::uint64_t>(dim)));
            rec.support_found.push_back(sol.support);
            if (cfg.keep_traces && trace) rec.traces.push_back(*trace);
            sols.push_back(std::move(sol));
          }
          rec.wall_time_ms =
              std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
          if (gt) {
            auto [err, exact] = score_solution(*gt, sols);
            rec.parameter_error = err;
            rec.exact_recovery = exact;
          }
          rec.solutions = std::move(sols);
        } catch (const std::exception& e) {
          rec.failed = true;
          rec.error = e.what();
          rec.support_found.clear();
          rec.solutions.clear();
          rec.traces.clear();
        }
        report.runs[static_cast<size_t>(r) * S + s] = std::move(rec);
      }
    }
  };

  const unsigned hw = std::thread::hardware_concurrency();
  const int pool = std::max(1, std::min<int>(cfg.n_runs, hw ? static_cast<int>(hw) : 1));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < pool; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  report.aggregates = aggregate_records(cfg.solvers, report.runs, cfg.n_runs);
  const int pad = alignment_pad(cfg);
  if (cfg.system == SystemKind::custom_csv) {
    report.rows_recorded =
        custom_data ? static_cast<int>(custom_data->n_samples()) : 0;
    report.rows_aligned = std::max(0, report.rows_recorded - pad);
  } else {
    report.rows_recorded = cfg.n_samples + pad;
    report.rows_aligned = cfg.n_samples;
  }
  return report;
}

// --- recovered-model resimulation ------------------------------------------

inline Eigen::MatrixXd coefficient_matrix(
    const std::vector<SparseSolution>& per_dim) {
  if (per_dim.empty()) throw std::invalid_argument("no solutions");
  Eigen::MatrixXd c(per_dim[0].coefficients.size(),
                    static_cast<Eigen::Index>(per_dim.size()));
  for (size_t d = 0; d < per_dim.size(); ++d) {
    if (per_dim[d].coefficients.size() != c.rows())
      throw std::invalid_argument("solutions disagree on basis size");
    c.col(static_cast<Eigen::Index>(d)) = per_dim[d].coefficients;
  }
  return c;
}

inline TimeSeriesSet resimulate_ode(const Eigen::MatrixXd& coefficients,
                                    int state_dim, int max_degree,
                                    const Eigen::VectorXd& z0, double dt,
                                    int steps, double bound = 1e6) {
  return simulate_poly_model(coefficients, state_dim, max_degree, z0, dt, steps,
                             bound);
}

inline TimeSeriesSet resimulate_map(const Eigen::MatrixXd& coefficients,
                                    int state_dim, int max_degree,
                                    const Eigen::VectorXd& x0, int steps,
                                    double bound = 1e6) {
  const auto mono = enumerate_monomials(state_dim, max_degree);
  if (coefficients.rows() != static_cast<Eigen::Index>(mono.size()) ||
      coefficients.cols() != state_dim)
    throw std::invalid_argument("coefficient shape does not match the basis");
  TimeSeriesSet out;
  out.dt = 1.0;
  out.times.resize(steps + 1);
  out.states.resize(steps + 1, state_dim);
  Eigen::VectorXd x = x0;
  Eigen::VectorXd phi(static_cast<Eigen::Index>(mono.size()));
  for (int t = 0; t <= steps; ++t) {
    out.times[t] = t;
    out.states.row(t) = x;
    if (x.cwiseAbs().maxCoeff() > bound)
      throw std::runtime_error("recovered map blew up at step " +
                               std::to_string(t));
    if (t == steps) break;
    for (size_t m = 0; m < mono.size(); ++m) phi[m] = mono[m].eval(x);
    x = coefficients.transpose() * phi;
  }
  return out;
}

}  // namespace entreg
