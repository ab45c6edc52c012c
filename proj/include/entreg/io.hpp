#pragma once

// Serialization boundary: JSON experiment configs and reports, CSV and binary
// trajectory files. Everything numeric round-trips exactly.

#include <entreg/bench.hpp>

#include <json.hpp>

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace entreg {

using nlohmann::json;

// --- small helpers ----------------------------------------------------------

namespace detail {

inline void require_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || it.key() == k;
    if (!ok)
      throw std::invalid_argument("unknown key \"" + it.key() + "\" in " + where);
  }
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// --- trajectory files -------------------------------------------------------

inline void write_trajectory_csv(const std::string& path,
                                 const TimeSeriesSet& ts) {
  auto out = detail::open_out(path);
  out << "t";
  for (Eigen::Index j = 0; j < ts.dim(); ++j) out << ",z" << (j + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < ts.n_samples(); ++i) {
    out << detail::format_double(ts.times[i]);
    for (Eigen::Index j = 0; j < ts.dim(); ++j)
      out << "," << detail::format_double(ts.states(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Generic numeric CSV: optional non-numeric header row, rectangular body.
inline Eigen::MatrixXd read_matrix_csv(const std::string& path,
                                       std::vector<std::string>* header_out = nullptr) {
  auto in = detail::open_in(path);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    std::vector<double> vals;
    bool numeric = true;
    for (const auto& c : cells) {
      try {
        size_t pos = 0;
        vals.push_back(std::stod(c, &pos));
        while (pos < c.size() && std::isspace(static_cast<unsigned char>(c[pos])))
          ++pos;
        if (pos != c.size()) numeric = false;
      } catch (...) {
        numeric = false;
      }
      if (!numeric) break;
    }
    if (first && !numeric) {
      header = cells;
      first = false;
      continue;
    }
    first = false;
    if (!numeric)
      throw std::invalid_argument(path + ": non-numeric cell in data row " +
                                  std::to_string(rows.size() + 1));
    if (!rows.empty() && vals.size() != rows[0].size())
      throw std::invalid_argument(path + ": ragged row " +
                                  std::to_string(rows.size() + 1));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[0].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  if (header_out) *header_out = std::move(header);
  return m;
}

inline TimeSeriesSet read_trajectory_csv(const std::string& path) {
  std::vector<std::string> header;
  Eigen::MatrixXd m = read_matrix_csv(path, &header);
  if (m.cols() < 2)
    throw std::invalid_argument(path + ": need a time column plus states");
  TimeSeriesSet ts;
  ts.times = m.col(0);
  ts.states = m.rightCols(m.cols() - 1);
  ts.dt = m.rows() >= 2 ? m(1, 0) - m(0, 0) : 1.0;
  return ts;
}

// Binary layout, little-endian, version 1:
//   bytes 0..3  magic "ERTJ"
//   u32 version, u32 state dimension, u64 row count, f64 dt
//   then per row: f64 time, f64 state[dim]
inline void write_trajectory_bin(const std::string& path,
                                 const TimeSeriesSet& ts) {
  auto out = detail::open_out(path, true);
  const char magic[4] = {'E', 'R', 'T', 'J'};
  const std::uint32_t version = 1;
  const std::uint32_t dim = static_cast<std::uint32_t>(ts.dim());
  const std::uint64_t rows = static_cast<std::uint64_t>(ts.n_samples());
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(&rows), 8);
  out.write(reinterpret_cast<const char*>(&ts.dt), 8);
  for (Eigen::Index i = 0; i < ts.n_samples(); ++i) {
    const double t = ts.times[i];
    out.write(reinterpret_cast<const char*>(&t), 8);
    for (Eigen::Index j = 0; j < ts.dim(); ++j) {
      const double v = ts.states(i, j);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline TimeSeriesSet read_trajectory_bin(const std::string& path) {
  auto in = detail::open_in(path, true);
  char magic[4];
  std::uint32_t version = 0, dim = 0;
  std::uint64_t rows = 0;
  TimeSeriesSet ts;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&ts.dt), 8);
  if (!in || std::memcmp(magic, "ERTJ", 4) != 0)
    throw std::invalid_argument(path + ": not a trajectory dump");
  if (version != 1)
    throw std::invalid_argument(path + ": unsupported version " +
                                std::to_string(version));
  ts.times.resize(static_cast<Eigen::Index>(rows));
  ts.states.resize(static_cast<Eigen::Index>(rows), dim);
  for (std::uint64_t i = 0; i < rows; ++i) {
    double t = 0.0;
    in.read(reinterpret_cast<char*>(&t), 8);
    ts.times[static_cast<Eigen::Index>(i)] = t;
    for (std::uint32_t j = 0; j < dim; ++j) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), 8);
      ts.states(static_cast<Eigen::Index>(i), j) = v;
    }
  }
  if (!in) throw std::invalid_argument(path + ": truncated trajectory dump");
  return ts;
}

// --- entropic-search trace --------------------------------------------------

inline json trace_to_json(const ErTrace& trace) {
  json fwd = json::array();
  for (const auto& s : trace.forward_steps)
    fwd.push_back({{"index", s.index}, {"cmi", s.cmi}, {"tolerance", s.tolerance}});
  json back = json::array();
  for (const auto& r : trace.backward_removals)
    back.push_back({{"index", r.index}, {"cmi", r.cmi}});
  return {{"forward_steps", std::move(fwd)},
          {"backward_removals", std::move(back)},
          {"final_support", trace.final_support}};
}

// --- experiment config ------------------------------------------------------

inline const char* tolerance_mode_name(ToleranceMode m) {
  return m == ToleranceMode::statical ? "static" : "dynamic";
}

inline const char* scheme_name(DerivScheme s) {
  switch (s) {
    case DerivScheme::central: return "central";
    case DerivScheme::forward: return "forward";
    case DerivScheme::map: return "map";
  }
  return "?";
}

inline DerivScheme scheme_from_name(const std::string& s) {
  if (s == "central") return DerivScheme::central;
  if (s == "forward") return DerivScheme::forward;
  if (s == "map") return DerivScheme::map;
  throw std::invalid_argument("unknown derivative_scheme: " + s);
}

inline SolverId solver_from_name(const std::string& s) {
  auto lower = [](std::string v) {
    for (char& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return v;
  };
  const std::string want = lower(s);
  for (SolverId id : {SolverId::er, SolverId::ls, SolverId::ols, SolverId::lasso,
                      SolverId::cs, SolverId::sindy, SolverId::tw})
    if (want == lower(solver_name(id))) return id;
  throw std::invalid_argument("unknown solver: " + s);
}

inline json solver_spec_to_json(const SolverSpec& spec) {
  json j;
  j["solver"] = solver_name(spec.id);
  if (spec.lambda) j["lambda"] = *spec.lambda;
  if (spec.epsilon) j["epsilon"] = *spec.epsilon;
  if (spec.threshold) j["threshold"] = *spec.threshold;
  if (spec.mu) j["mu"] = *spec.mu;
  if (spec.tw_tol) j["tw_tol"] = *spec.tw_tol;
  if (spec.id == SolverId::er) {
    j["knn_k"] = spec.er.knn_k;
    j["tolerance_mode"] = tolerance_mode_name(spec.er.tolerance_mode);
    j["alpha"] = spec.er.shuffle.alpha;
    j["n_shuffles"] = spec.er.shuffle.n_shuffles;
    if (spec.er.max_forward_terms)
      j["max_forward_terms"] = *spec.er.max_forward_terms;
  }
  return j;
}

inline SolverSpec solver_spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("solver"))
    throw std::invalid_argument("each solver entry needs a \"solver\" name");
  detail::require_keys(j,
                       {"solver", "lambda", "epsilon", "threshold", "mu", "tw_tol",
                        "knn_k", "tolerance_mode", "alpha", "n_shuffles",
                        "max_forward_terms"},
                       "solver \"" + j["solver"].get<std::string>() + "\"");
  SolverSpec spec;
  spec.id = solver_from_name(j["solver"].get<std::string>());
  if (j.contains("lambda")) spec.lambda = j["lambda"].get<double>();
  if (j.contains("epsilon")) spec.epsilon = j["epsilon"].get<double>();
  if (j.contains("threshold")) spec.threshold = j["threshold"].get<double>();
  if (j.contains("mu")) spec.mu = j["mu"].get<double>();
  if (j.contains("tw_tol")) spec.tw_tol = j["tw_tol"].get<double>();
  if (j.contains("knn_k")) spec.er.knn_k = j["knn_k"].get<int>();
  if (j.contains("tolerance_mode")) {
    const std::string m = j["tolerance_mode"].get<std::string>();
    if (m == "static")
      spec.er.tolerance_mode = ToleranceMode::statical;
    else if (m == "dynamic")
      spec.er.tolerance_mode = ToleranceMode::dynamical;
    else
      throw std::invalid_argument("tolerance_mode must be static or dynamic");
  }
  if (j.contains("alpha")) spec.er.shuffle.alpha = j["alpha"].get<double>();
  if (j.contains("n_shuffles"))
    spec.er.shuffle.n_shuffles = j["n_shuffles"].get<int>();
  if (j.contains("max_forward_terms") && !j["max_forward_terms"].is_null())
    spec.er.max_forward_terms = j["max_forward_terms"].get<int>();
  return spec;
}

inline json config_to_json(const ExperimentConfig& cfg) {
  json p;
  const SystemParams& sp = cfg.params;
  switch (cfg.system) {
    case SystemKind::lorenz:
      p = {{"sigma", sp.sigma}, {"rho", sp.rho},     {"beta", sp.beta},
           {"dt", sp.dt},       {"sample_stride", sp.sample_stride},
           {"burn_in", sp.burn_in}, {"x0_jitter", sp.x0_jitter}};
      if (!sp.x0.empty()) p["x0"] = sp.x0;
      break;
    case SystemKind::kse:
      p = {{"nu", sp.nu},
           {"n_modes", sp.n_modes},
           {"dt", sp.dt},
           {"sample_stride", sp.sample_stride},
           {"burn_in", sp.burn_in},
           {"init_scale", sp.init_scale}};
      if (!sp.x0.empty()) p["x0"] = sp.x0;
      break;
    case SystemKind::double_well:
      p = {{"lo", sp.lo},
           {"hi", sp.hi},
           {"outlier_x", sp.outlier_x},
           {"outlier_value", sp.outlier_value}};
      break;
    case SystemKind::logistic_net:
      p = {{"n_nodes", sp.n_nodes},   {"a", sp.a},
           {"k", sp.k},               {"edges", sp.edges},
           {"adjacency_seed", sp.adjacency_seed}, {"burn_in", sp.burn_in}};
      break;
    case SystemKind::custom_csv:
      p = {{"csv_path", sp.csv_path}};
      break;
  }
  json solvers = json::array();
  for (const auto& s : cfg.solvers) solvers.push_back(solver_spec_to_json(s));
  return {{"system", system_name(cfg.system)},
          {"system_params", std::move(p)},
          {"basis_degree", cfg.basis_degree},
          {"n_samples", cfg.n_samples},
          {"noise",
           {{"eps1", cfg.noise.eps1}, {"eps2", cfg.noise.eps2}, {"p", cfg.noise.p}}},
          {"derivative_scheme", scheme_name(cfg.derivative_scheme)},
          {"solvers", std::move(solvers)},
          {"n_runs", cfg.n_runs},
          {"seed", cfg.seed},
          {"keep_traces", cfg.keep_traces}};
}

inline ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  detail::require_keys(j,
                       {"system", "system_params", "basis_degree", "n_samples",
                        "noise", "derivative_scheme", "solvers", "n_runs", "seed",
                        "keep_traces"},
                       "config");
  ExperimentConfig cfg;
  if (j.contains("system")) cfg.system = system_from_name(j["system"]);
  SystemParams& sp = cfg.params;
  if (j.contains("system_params")) {
    const json& p = j["system_params"];
    detail::require_keys(
        p,
        {"dt", "sample_stride", "burn_in", "sigma", "rho", "beta", "x0",
         "x0_jitter", "nu", "n_modes", "init_scale", "n_nodes", "a", "k", "edges",
         "adjacency_seed", "lo", "hi", "outlier_x", "outlier_value", "csv_path"},
        "system_params");
    if (p.contains("dt")) sp.dt = p["dt"].get<double>();
    if (p.contains("sample_stride")) sp.sample_stride = p["sample_stride"].get<int>();
    if (p.contains("burn_in")) sp.burn_in = p["burn_in"].get<int>();
    if (p.contains("sigma")) sp.sigma = p["sigma"].get<double>();
    if (p.contains("rho")) sp.rho = p["rho"].get<double>();
    if (p.contains("beta")) sp.beta = p["beta"].get<double>();
    if (p.contains("x0")) sp.x0 = p["x0"].get<std::vector<double>>();
    if (p.contains("x0_jitter")) sp.x0_jitter = p["x0_jitter"].get<double>();
    if (p.contains("nu")) sp.nu = p["nu"].get<double>();
    if (p.contains("n_modes")) sp.n_modes = p["n_modes"].get<int>();
    if (p.contains("init_scale")) sp.init_scale = p["init_scale"].get<double>();
    if (p.contains("n_nodes")) sp.n_nodes = p["n_nodes"].get<int>();
    if (p.contains("a")) sp.a = p["a"].get<double>();
    if (p.contains("k")) sp.k = p["k"].get<double>();
    if (p.contains("edges")) sp.edges = p["edges"].get<int>();
    if (p.contains("adjacency_seed"))
      sp.adjacency_seed = p["adjacency_seed"].get<std::uint64_t>();
    if (p.contains("lo")) sp.lo = p["lo"].get<double>();
    if (p.contains("hi")) sp.hi = p["hi"].get<double>();
    if (p.contains("outlier_x")) sp.outlier_x = p["outlier_x"].get<double>();
    if (p.contains("outlier_value"))
      sp.outlier_value = p["outlier_value"].get<double>();
    if (p.contains("csv_path")) sp.csv_path = p["csv_path"].get<std::string>();
  }
  if (j.contains("basis_degree")) cfg.basis_degree = j["basis_degree"].get<int>();
  if (j.contains("n_samples")) cfg.n_samples = j["n_samples"].get<int>();
  if (j.contains("noise")) {
    const json& n = j["noise"];
    detail::require_keys(n, {"eps1", "eps2", "p"}, "noise");
    if (n.contains("eps1")) cfg.noise.eps1 = n["eps1"].get<double>();
    if (n.contains("eps2")) cfg.noise.eps2 = n["eps2"].get<double>();
    if (n.contains("p")) cfg.noise.p = n["p"].get<double>();
  }
  if (j.contains("derivative_scheme"))
    cfg.derivative_scheme = scheme_from_name(j["derivative_scheme"]);
  if (j.contains("solvers")) {
    if (!j["solvers"].is_array())
      throw std::invalid_argument("solvers must be an array");
    for (const auto& s : j["solvers"])
      cfg.solvers.push_back(solver_spec_from_json(s));
  }
  if (j.contains("n_runs")) cfg.n_runs = j["n_runs"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("keep_traces")) cfg.keep_traces = j["keep_traces"].get<bool>();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  auto in = detail::open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return config_from_json(j);
}

// --- reports ----------------------------------------------------------------

inline json solution_to_json(const SparseSolution& sol) {
  json coef = json::object();
  for (int idx : sol.support)
    coef[std::to_string(idx)] = sol.coefficients[idx];
  return {{"solver", solver_name(sol.solver_id)},
          {"support", sol.support},
          {"coefficients", std::move(coef)},
          {"residual_norm", sol.residual_norm},
          {"hyperparams", sol.hyperparams}};
}

inline std::string iso_timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// The timestamp is confined to `meta` so that everything outside it is a pure
// function of the config.
inline json report_to_json(const ExperimentReport& report,
                           bool include_traces = false) {
  json runs = json::array();
  for (const auto& rec : report.runs) {
    json r = {{"run", rec.run},
              {"solver", solver_name(rec.solver)},
              {"seed", rec.seed},
              {"parameter_error",
               std::isfinite(rec.parameter_error) ? json(rec.parameter_error)
                                                  : json(nullptr)},
              {"exact_recovery", rec.exact_recovery},
              {"wall_time_ms", rec.wall_time_ms},
              {"failed", rec.failed},
              {"support_found", rec.support_found}};
    if (rec.failed) r["error"] = rec.error;
    json hp = json::array();
    for (const auto& sol : rec.solutions) hp.push_back(sol.hyperparams);
    r["hyperparams"] = std::move(hp);
    if (include_traces && !rec.traces.empty()) {
      json tr = json::array();
      for (const auto& t : rec.traces) tr.push_back(trace_to_json(t));
      r["traces"] = std::move(tr);
    }
    runs.push_back(std::move(r));
  }
  json aggs = json::array();
  for (const auto& a : report.aggregates) {
    aggs.push_back(
        {{"solver", solver_name(a.solver)},
         {"median_error",
          std::isfinite(a.median_error) ? json(a.median_error) : json(nullptr)},
         {"q1_error",
          std::isfinite(a.q1_error) ? json(a.q1_error) : json(nullptr)},
         {"q3_error",
          std::isfinite(a.q3_error) ? json(a.q3_error) : json(nullptr)},
         {"exact_rate", a.exact_rate},
         {"median_wall_time_ms", a.median_wall_time_ms},
         {"n_failed", a.n_failed}});
  }
  return {{"config", config_to_json(report.config)},
          {"meta",
           {{"timestamp", iso_timestamp_utc()},
            {"scored", report.scored},
            {"rows_recorded", report.rows_recorded},
            {"rows_aligned", report.rows_aligned},
            {"tw_trim_rule",
             "exclude row t when |r_t| > mu*||r||_2/sqrt(l), refit, repeat"}}},
          {"runs", std::move(runs)},
          {"aggregates", std::move(aggs)}};
}

// Fixed, ordered per-run columns.
inline std::string report_to_csv(const ExperimentReport& report) {
  std::string s = "run,solver,seed,parameter_error,exact_recovery,wall_time_ms\n";
  for (const auto& rec : report.runs) {
    s += std::to_string(rec.run);
    s += ",";
    s += solver_name(rec.solver);
    s += ",";
    s += std::to_string(rec.seed);
    s += ",";
    if (std::isfinite(rec.parameter_error))
      s += detail::format_double(rec.parameter_error);
    s += ",";
    s += rec.exact_recovery ? "1" : "0";
    s += ",";
    s += detail::format_double(rec.wall_time_ms);
    s += "\n";
  }
  return s;
}

// Parse back the pieces needed to recompute aggregates (round-trip checks).
struct ParsedReport {
  std::vector<RunRecord> runs;
  std::vector<SolverAggregate> aggregates;
  int n_runs = 0;
};

inline ParsedReport report_from_json(const json& j) {
  ParsedReport out;
  out.n_runs = j.at("config").at("n_runs").get<int>();
  for (const auto& r : j.at("runs")) {
    RunRecord rec;
    rec.run = r.at("run").get<int>();
    rec.solver = solver_from_name(r.at("solver").get<std::string>());
    rec.seed = r.at("seed").get<std::uint64_t>();
    rec.parameter_error = r.at("parameter_error").is_null()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : r.at("parameter_error").get<double>();
    rec.exact_recovery = r.at("exact_recovery").get<bool>();
    rec.wall_time_ms = r.at("wall_time_ms").get<double>();
    rec.failed = r.at("failed").get<bool>();
    rec.support_found = r.at("support_found").get<std::vector<std::vector<int>>>();
    out.runs.push_back(std::move(rec));
  }
  for (const auto& a : j.at("aggregates")) {
    SolverAggregate agg;
    agg.solver = solver_from_name(a.at("solver").get<std::string>());
    agg.median_error = a.at("median_error").is_null()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : a.at("median_error").get<double>();
    agg.q1_error = a.at("q1_error").is_null()
                       ? std::numeric_limits<double>::quiet_NaN()
                       : a.at("q1_error").get<double>();
    agg.q3_error = a.at("q3_error").is_null()
                       ? std::numeric_limits<double>::quiet_NaN()
                       : a.at("q3_error").get<double>();
    agg.exact_rate = a.at("exact_rate").get<double>();
    agg.median_wall_time_ms = a.at("median_wall_time_ms").get<double>();
    agg.n_failed = a.at("n_failed").get<int>();
    out.aggregates.push_back(std::move(agg));
  }
  return out;
}

struct WrittenReport {
  std::vector<std::string> paths;
};

inline WrittenReport write_report(const ExperimentReport& report,
                                  const std::string& out_dir,
                                  const std::string& format,
                                  bool include_traces = false) {
  WrittenReport written;
  const std::string base = out_dir.empty() ? std::string(".") : out_dir;
  if (format != "json" && format != "csv" && format != "both")
    throw std::invalid_argument("format must be json, csv, or both");
  if (format == "json" || format == "both") {
    const std::string path = base + "/report.json";
    auto out = detail::open_out(path);
    out << report_to_json(report, include_traces).dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
    written.paths.push_back(path);
  }
  if (format == "csv" || format == "both") {
    const std::string path = base + "/report.csv";
    auto out = detail::open_out(path);
    out << report_to_csv(report);
    if (!out) throw std::runtime_error("write failed: " + path);
    written.paths.push_back(path);
  }
  return written;
}

}  // namespace entreg
