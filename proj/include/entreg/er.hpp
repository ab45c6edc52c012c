#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <entreg/basis.hpp>
#include <entreg/infotheory.hpp>
#include <entreg/rng.hpp>
#include <entreg/solvers.hpp>

namespace entreg {

enum class ToleranceMode { statical, dynamical };

struct ErConfig {
  int knn_k = 2;
  ToleranceMode tolerance_mode = ToleranceMode::statical;
  ShuffleTestConfig shuffle;  // alpha and n_shuffles; its seed field is unused
                              // here — every shuffle test inside a run draws
                              // its stream from `seed` and an invocation index
  std::optional<int> max_forward_terms;  // default: min(K, l/2)
  std::uint64_t seed = 0;
};

struct ErForwardStep {
  int index = -1;
  double cmi = 0.0;
  double tolerance = 0.0;  // value the step was tested against
};

struct ErBackwardRemoval {
  int index = -1;
  double cmi = 0.0;
};

struct ErTrace {
  std::vector<ErForwardStep> forward_steps;
  std::vector<ErBackwardRemoval> backward_removals;
  std::vector<int> final_support;
};

// Least-squares fit restricted to the support columns, zero elsewhere; the
// empty support yields the zero vector.
inline Eigen::VectorXd regress_on_support(const Eigen::MatrixXd& phi,
                                          const Eigen::VectorXd& f,
                                          const std::vector<int>& support) {
  return least_squares_restricted(phi, f, support);
}

inline Eigen::VectorXd regress_on_support(const BasisMatrix& phi,
                                          const Eigen::VectorXd& f,
                                          const std::vector<int>& support) {
  return least_squares_restricted(phi.values, f, support);
}

namespace detail {

inline ShuffleTestConfig er_shuffle_stream(const ErConfig& cfg, int invocation) {
  ShuffleTestConfig s = cfg.shuffle;
  s.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(invocation));
  return s;
}

struct ForwardResult {
  ErTrace trace;
  double tol = 0.0;  // tolerance in force at termination
  int shuffle_invocations = 0;
};

inline ForwardResult forward_er_impl(const Eigen::MatrixXd& phi,
                                     const Eigen::VectorXd& f,
                                     const ErConfig& cfg) {
  const Eigen::Index l = phi.rows();
  const Eigen::Index K = phi.cols();
  if (f.size() != l) throw std::invalid_argument("forward_er: shape mismatch");
  if (cfg.knn_k < 1 || l <= cfg.knn_k)
    throw std::invalid_argument("forward_er: need samples > knn_k >= 1");

  int cap = static_cast<int>(std::min<Eigen::Index>(K, l / 2));
  if (cfg.max_forward_terms) cap = std::min<int>(*cfg.max_forward_terms, static_cast<int>(K));

  ForwardResult out;
  const Eigen::MatrixXd fm = f;  // target as an l x 1 sample cloud
  double tol = 0.0;
  if (cfg.tolerance_mode == ToleranceMode::statical) {
    tol = shuffle_threshold(fm, fm, Eigen::MatrixXd(), cfg.knn_k,
                            er_shuffle_stream(cfg, out.shuffle_invocations++));
  }

  std::vector<int> selected;
  Eigen::MatrixXd z;  // current model output; empty means unconditioned
  std::vector<char> in_model(static_cast<size_t>(K), 0);

  while (static_cast<int>(selected.size()) < cap) {
    double best_v = -std::numeric_limits<double>::infinity();
    int best_j = -1;
    Eigen::MatrixXd best_x;
    for (int j = 0; j < static_cast<int>(K); ++j) {
      if (in_model[static_cast<size_t>(j)]) continue;
      std::vector<int> trial = selected;
      trial.push_back(j);
      const Eigen::VectorXd a = least_squares_restricted(phi, f, trial);
      const Eigen::MatrixXd x = phi * a;
      const double v = estimate_cmi(x, fm, z, cfg.knn_k);
      if (v > best_v + 1e-12) {  // ties within 1e-12 keep the lowest index
        best_v = v;
        best_j = j;
        best_x = x;
      }
    }
    if (best_j < 0 || best_v <= tol) break;

    selected.push_back(best_j);
    std::sort(selected.begin(), selected.end());
    in_model[static_cast<size_t>(best_j)] = 1;
    const double tested_against = tol;
    const Eigen::MatrixXd z_prev = z;
    z = phi * least_squares_restricted(phi, f, selected);
    if (cfg.tolerance_mode == ToleranceMode::dynamical) {
      // null statistic of the step just taken: the accepted model output
      // against permuted targets, conditioned on the previous model
      tol = shuffle_threshold(best_x, fm, z_prev, cfg.knn_k,
                              er_shuffle_stream(cfg, out.shuffle_invocations++));
    }
    out.trace.forward_steps.push_back({best_j, best_v, tested_against});
  }

  out.tol = tol;
  out.trace.final_support = selected;
  return out;
}

}  // namespace detail

// Forward stage: grow the support greedily by conditional-information gain
// until no candidate clears the tolerance.
inline ErTrace forward_er(const Eigen::MatrixXd& phi, const Eigen::VectorXd& f,
                          const ErConfig& cfg) {
  return detail::forward_er_impl(phi, f, cfg).trace;
}

inline ErTrace forward_er(const BasisMatrix& phi, const Eigen::VectorXd& f,
                          const ErConfig& cfg) {
  return detail::forward_er_impl(phi.values, f, cfg).trace;
}

// Backward stage: repeatedly locate the member whose removal costs the least
// conditional information and drop it while that cost stays below tolerance.
// The loop is structured exactly like the published pseudocode: the running
// minimum starts at zero with no removal candidate, so the first iteration
// removes nothing, and a nonpositive tolerance leaves the support untouched.
inline ErTrace backward_er(const Eigen::MatrixXd& phi, const Eigen::VectorXd& f,
                           const std::vector<int>& forward_support,
                           const ErConfig& cfg,
                           std::optional<double> tol_override = std::nullopt) {
  ErTrace trace;
  std::vector<int> s = forward_support;
  std::sort(s.begin(), s.end());
  if (s.empty()) return trace;

  const Eigen::MatrixXd fm = f;
  double tol;
  if (tol_override) {
    tol = *tol_override;
  } else {
    tol = shuffle_threshold(fm, fm, Eigen::MatrixXd(), cfg.knn_k,
                            detail::er_shuffle_stream(cfg, 0));
  }

  double v = 0.0;
  int p = -1;
  while (v < tol) {
    if (p >= 0) {
      trace.backward_removals.push_back({p, v});
      s.erase(std::remove(s.begin(), s.end(), p), s.end());
    }
    if (s.empty()) break;
    const Eigen::MatrixXd x = phi * least_squares_restricted(phi, f, s);
    v = std::numeric_limits<double>::infinity();
    p = -1;
    for (int j : s) {
      std::vector<int> rest;
      for (int i : s)
        if (i != j) rest.push_back(i);
      const Eigen::MatrixXd zj = phi * least_squares_restricted(phi, f, rest);
      const double vj = estimate_cmi(x, fm, zj, cfg.knn_k);
      if (vj < v - 1e-12) {  // ties within 1e-12 keep the lowest index
        v = vj;
        p = j;
      }
    }
  }

  trace.final_support = s;
  return trace;
}

inline ErTrace backward_er(const BasisMatrix& phi, const Eigen::VectorXd& f,
                           const std::vector<int>& forward_support,
                           const ErConfig& cfg,
                           std::optional<double> tol_override = std::nullopt) {
  return backward_er(phi.values, f, forward_support, cfg, tol_override);
}

// Full Entropic Regression: forward selection, backward elimination with the
// forward tolerance, least-squares refit on the survivors.
inline std::pair<SparseSolution, ErTrace> entropic_regression(
    const Eigen::MatrixXd& phi, const Eigen::VectorXd& f, const ErConfig& cfg) {
  auto fwd = detail::forward_er_impl(phi, f, cfg);
  ErTrace trace = std::move(fwd.trace);

  ErTrace back = backward_er(phi, f, trace.final_support, cfg, fwd.tol);
  trace.backward_removals = std::move(back.backward_removals);
  trace.final_support = std::move(back.final_support);

  SparseSolution sol;
  sol.solver_id = SolverId::er;
  sol.support = trace.final_support;
  sol.coefficients = regress_on_support(phi, f, sol.support);
  sol.residual_norm = (phi * sol.coefficients - f).norm();
  sol.hyperparams["knn_k"] = std::to_string(cfg.knn_k);
  sol.hyperparams["tolerance_mode"] =
      cfg.tolerance_mode == ToleranceMode::statical ? "static" : "dynamic";
  sol.hyperparams["alpha"] = detail::fmt(cfg.shuffle.alpha);
  sol.hyperparams["n_shuffles"] = std::to_string(cfg.shuffle.n_shuffles);
  sol.hyperparams["tolerance"] = detail::fmt(fwd.tol);
  sol.hyperparams["forward_steps"] = std::to_string(trace.forward_steps.size());
  sol.hyperparams["backward_removals"] =
      std::to_string(trace.backward_removals.size());
  return {sol, trace};
}

inline std::pair<SparseSolution, ErTrace> entropic_regression(
    const BasisMatrix& phi, const Eigen::VectorXd& f, const ErConfig& cfg) {
  return entropic_regression(phi.values, f, cfg);
}

}  // namespace entreg
