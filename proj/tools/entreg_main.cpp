// entreg: sparse nonlinear system identification from time-series data.
//
// Subcommands:
//   generate     simulate a configured system and write the trajectory
//   fit          run configured solvers on one trajectory file
//   bench        run a full multi-run experiment and write report files
//   estimate-mi  k-NN (conditional) mutual information on CSV columns
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <entreg/bench.hpp>
#include <entreg/io.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

entreg::ExperimentConfig load_config_checked(const std::string& path) {
  try {
    return entreg::load_config(path);
  } catch (const std::runtime_error& e) {
    // an unreadable config file is a configuration error, not a runtime one
    throw std::invalid_argument(e.what());
  }
}

std::vector<int> parse_columns(const std::string& list) {
  std::vector<int> cols;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    size_t used = 0;
    const int c = std::stoi(tok, &used);
    if (used != tok.size() || c < 0)
      throw std::invalid_argument("bad column index: " + tok);
    cols.push_back(c);
  }
  return cols;
}

Eigen::MatrixXd pick_columns(const Eigen::MatrixXd& m,
                             const std::vector<int>& cols,
                             const std::string& which) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] >= m.cols())
      throw std::invalid_argument("--" + which + " column " +
                                  std::to_string(cols[i]) +
                                  " out of range (file has " +
                                  std::to_string(m.cols()) + " columns)");
    out.col(static_cast<Eigen::Index>(i)) = m.col(cols[i]);
  }
  return out;
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::string format;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_seed_option(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "override the config's master seed")
      ->each([&o](const std::string&) { o.seed_set = true; });
}

entreg::ExperimentConfig load_with_overrides(const CommonOpts& o) {
  entreg::ExperimentConfig cfg = load_config_checked(o.config_path);
  if (o.seed_set) cfg.seed = o.seed;
  return cfg;
}

int run_generate(const CommonOpts& o) {
  entreg::ExperimentConfig cfg = load_with_overrides(o);
  const std::string fmt = o.format.empty() ? "csv" : o.format;
  if (fmt != "csv" && fmt != "binary" && fmt != "both")
    throw std::invalid_argument("generate --format must be csv, binary, or both");

  entreg::TimeSeriesSet custom;
  const entreg::TimeSeriesSet* custom_ptr = nullptr;
  if (cfg.system == entreg::SystemKind::custom_csv) {
    custom = entreg::read_trajectory_csv(cfg.params.csv_path);
    custom_ptr = &custom;
  }
  entreg::validate_config(cfg, custom_ptr != nullptr);

  const auto prob =
      entreg::make_problem(cfg, entreg::derive_seed(cfg.seed, 0), custom_ptr);
  entreg::TimeSeriesSet ts;
  ts.times = prob.recorded_times;
  ts.states = prob.recorded_states;
  ts.dt = prob.dt_recorded;

  json out;
  out["rows"] = prob.rows_recorded;
  out["dim"] = static_cast<int>(ts.states.cols());
  out["dt"] = ts.dt;
  out["written"] = json::array();
  if (fmt == "csv" || fmt == "both") {
    const std::string path = o.out_dir + "/trajectory.csv";
    entreg::write_trajectory_csv(path, ts);
    out["written"].push_back(path);
  }
  if (fmt == "binary" || fmt == "both") {
    const std::string path = o.out_dir + "/trajectory.bin";
    entreg::write_trajectory_bin(path, ts);
    out["written"].push_back(path);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_fit(const CommonOpts& o, const std::string& data_path, bool with_traces,
            int resim_steps) {
  entreg::ExperimentConfig cfg = load_with_overrides(o);
  const entreg::TimeSeriesSet ts = entreg::read_trajectory_csv(data_path);

  // treat the file as the single data source regardless of cfg.system
  entreg::ExperimentConfig one = cfg;
  one.system = entreg::SystemKind::custom_csv;
  one.params.csv_path = data_path;
  one.n_runs = 1;
  entreg::validate_config(one, true);
  if (one.solvers.empty())
    throw std::invalid_argument("config lists no solvers");

  const std::uint64_t run_seed = entreg::derive_seed(one.seed, 0);
  const auto prob = entreg::make_problem(one, run_seed, &ts);
  const int n_dims = static_cast<int>(prob.f.cols());

  json out;
  out["data"] = data_path;
  out["rows_aligned"] = static_cast<int>(prob.phi.values.rows());
  out["basis_degree"] = one.basis_degree;
  out["basis_columns"] = static_cast<int>(prob.phi.values.cols());
  out["solvers"] = json::array();

  std::vector<entreg::SparseSolution> first_solver_fits;
  for (size_t s = 0; s < one.solvers.size(); ++s) {
    json js;
    js["solver"] = entreg::solver_name(one.solvers[s].id);
    js["dims"] = json::array();
    for (int dim = 0; dim < n_dims; ++dim) {
      const std::uint64_t fit_seed =
          entreg::derive_seed(run_seed, 100 + static_cast<int>(s) * 32 + dim);
      auto [sol, trace] =
          entreg::fit_one(one.solvers[s], prob.phi.values, prob.f.col(dim),
                          fit_seed);
      json jd = entreg::solution_to_json(sol);
      jd["dim"] = dim;
      if (with_traces && trace) jd["trace"] = entreg::trace_to_json(*trace);
      js["dims"].push_back(std::move(jd));
      if (s == 0) first_solver_fits.push_back(std::move(sol));
    }
    out["solvers"].push_back(std::move(js));
  }

  if (resim_steps >= 0) {
    const int steps =
        resim_steps > 0 ? resim_steps : static_cast<int>(ts.n_samples()) - 1;
    const auto coeffs = entreg::coefficient_matrix(first_solver_fits);
    const Eigen::VectorXd z0 = prob.recorded_states.row(0);
    entreg::TimeSeriesSet resim;
    if (entreg::effective_scheme(one) == entreg::DerivScheme::map)
      resim = entreg::resimulate_map(coeffs, n_dims, one.basis_degree, z0, steps);
    else
      resim = entreg::resimulate_ode(coeffs, n_dims, one.basis_degree, z0,
                                     ts.dt, steps);
    const std::string path = o.out_dir + "/resimulated.csv";
    entreg::write_trajectory_csv(path, resim);
    out["resimulated"] = path;
    out["resimulated_steps"] = steps;
  }

  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_bench(const CommonOpts& o, bool with_traces) {
  entreg::ExperimentConfig cfg = load_with_overrides(o);
  if (with_traces) cfg.keep_traces = true;
  const std::string fmt = o.format.empty() ? "both" : o.format;

  entreg::TimeSeriesSet custom;
  const entreg::TimeSeriesSet* custom_ptr = nullptr;
  if (cfg.system == entreg::SystemKind::custom_csv) {
    custom = entreg::read_trajectory_csv(cfg.params.csv_path);
    custom_ptr = &custom;
  }

  const entreg::ExperimentReport report = entreg::run_experiment(cfg, custom_ptr);
  const auto written = entreg::write_report(report, o.out_dir, fmt, with_traces);

  std::ostringstream table;
  table << "system " << entreg::system_name(report.config.system) << ", "
        << report.config.n_runs << " runs, " << report.rows_aligned
        << " aligned rows (" << report.rows_recorded << " recorded)\n";
  table << "solver      median_err      q1_err          q3_err       "
           "exact_rate  failed\n";
  for (const auto& agg : report.aggregates) {
    char line[160];
    std::snprintf(line, sizeof line, "%-10s  %-14.6g  %-14.6g  %-11.6g  %-10.3g  %d\n",
                  entreg::solver_name(agg.solver), agg.median_error,
                  agg.q1_error, agg.q3_error, agg.exact_rate, agg.n_failed);
    table << line;
  }
  for (const auto& p : written.paths) table << "wrote " << p << "\n";
  std::cout << table.str();
  return 0;
}

int run_estimate_mi(const std::string& data_path, const std::string& xs,
                    const std::string& ys, const std::string& zs, int knn_k,
                    bool do_shuffle, double alpha, int n_shuffles,
                    std::uint64_t seed) {
  const auto xcols = parse_columns(xs);
  const auto ycols = parse_columns(ys);
  const auto zcols = parse_columns(zs);
  if (xcols.empty() || ycols.empty())
    throw std::invalid_argument("--x and --y need at least one column each");

  const Eigen::MatrixXd m = entreg::read_matrix_csv(data_path);
  const Eigen::MatrixXd x = pick_columns(m, xcols, "x");
  const Eigen::MatrixXd y = pick_columns(m, ycols, "y");
  const Eigen::MatrixXd z = pick_columns(m, zcols, "z");

  json out;
  out["rows"] = static_cast<int>(m.rows());
  out["knn_k"] = knn_k;
  out["x"] = xcols;
  out["y"] = ycols;
  out["z"] = zcols;
  out["estimate"] = entreg::estimate_cmi(x, y, z, knn_k);
  if (do_shuffle) {
    entreg::ShuffleTestConfig sc;
    sc.alpha = alpha;
    sc.n_shuffles = n_shuffles;
    sc.seed = seed;
    const double thr = entreg::shuffle_threshold(x, y, z, knn_k, sc);
    out["threshold"] = thr;
    out["significant"] = out["estimate"].get<double>() > thr;
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse nonlinear system identification toolkit"};
  app.require_subcommand(1);

  CommonOpts gen_o, fit_o, bench_o;
  std::string mi_data, mi_x, mi_y, mi_z;
  std::string fit_data;
  int mi_k = 3, mi_shuffles = 100, fit_resim = 0;
  double mi_alpha = 0.95;
  std::uint64_t mi_seed = 0;
  bool mi_shuffle = false, fit_traces = false, bench_traces = false;

  auto* gen = app.add_subcommand("generate", "simulate and write a trajectory");
  gen->add_option("--config", gen_o.config_path, "experiment config JSON")
      ->required();
  add_seed_option(gen, gen_o);
  gen->add_option("--out-dir", gen_o.out_dir, "output directory (default .)");
  gen->add_option("--format", gen_o.format, "csv | binary | both (default csv)");

  auto* fit = app.add_subcommand("fit", "fit configured solvers to one dataset");
  fit->add_option("--config", fit_o.config_path, "experiment config JSON")
      ->required();
  fit->add_option("--data", fit_data, "trajectory CSV (t,z1..zN)")->required();
  add_seed_option(fit, fit_o);
  fit->add_option("--out-dir", fit_o.out_dir, "output directory (default .)");
  fit->add_flag("--traces", fit_traces, "include search traces in the output");
  fit->add_option("--resimulate", fit_resim,
                  "integrate the first solver's recovered model this many steps "
                  "(0: match input length) and write resimulated.csv");

  auto* bench = app.add_subcommand("bench", "run a full experiment and report");
  bench->add_option("--config", bench_o.config_path, "experiment config JSON")
      ->required();
  add_seed_option(bench, bench_o);
  bench->add_option("--out-dir", bench_o.out_dir, "output directory (default .)");
  bench->add_option("--format", bench_o.format, "json | csv | both (default both)");
  bench->add_flag("--traces", bench_traces, "embed solver traces in report.json");

  auto* mi = app.add_subcommand("estimate-mi",
                                "k-NN mutual information between CSV columns");
  mi->add_option("--data", mi_data, "CSV file (optional header row)")->required();
  mi->add_option("--x", mi_x, "comma-separated column indices")->required();
  mi->add_option("--y", mi_y, "comma-separated column indices")->required();
  mi->add_option("--z", mi_z, "conditioning columns (optional)");
  mi->add_option("--knn", mi_k, "nearest-neighbor count (default 3)");
  mi->add_flag("--shuffle", mi_shuffle, "also compute a shuffle-test threshold");
  mi->add_option("--alpha", mi_alpha, "shuffle-test quantile (default 0.95)");
  mi->add_option("--n-shuffles", mi_shuffles, "shuffle count (default 100)");
  mi->add_option("--seed", mi_seed, "shuffle-test seed");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return run_generate(gen_o);
    if (fit->parsed())
      return run_fit(fit_o, fit_data, fit_traces,
                     fit->count("--resimulate") ? fit_resim : -1);
    if (bench->parsed()) return run_bench(bench_o, bench_traces);
    if (mi->parsed())
      return run_estimate_mi(mi_data, mi_x, mi_y, mi_z, mi_k, mi_shuffle,
                             mi_alpha, mi_shuffles, mi_seed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
