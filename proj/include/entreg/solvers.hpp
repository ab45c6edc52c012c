#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <entreg/basis.hpp>

namespace entreg {

enum class SolverId { er, ls, ols, lasso, cs, sindy, tw };

inline const char* solver_name(SolverId id) {
  switch (id) {
    case SolverId::er: return "ER";
    case SolverId::ls: return "LS";
    case SolverId::ols: return "OLS";
    case SolverId::lasso: return "Lasso";
    case SolverId::cs: return "CS";
    case SolverId::sindy: return "SINDy";
    case SolverId::tw: return "TW";
  }
  return "?";
}

struct SparseSolution {
  Eigen::VectorXd coefficients;
  std::vector<int> support;
  SolverId solver_id = SolverId::ls;
  std::map<std::string, std::string> hyperparams;
  double residual_norm = 0.0;
};

struct CrossValidationPlan {
  int n_folds = 5;
  std::vector<double> grid;  // candidate hyperparameter values
};

inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 1 || lo <= 0.0 || hi <= 0.0)
    throw std::invalid_argument("log_grid: need n >= 1 and positive endpoints");
  std::vector<double> g(static_cast<size_t>(n));
  if (n == 1) {
    g[0] = hi;
    return g;
  }
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    g[static_cast<size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
  return g;
}

// Minimum-norm least squares restricted to a column subset; entries off the
// subset stay exactly zero.
inline Eigen::VectorXd least_squares_restricted(const Eigen::MatrixXd& phi,
                                                const Eigen::VectorXd& f,
                                                const std::vector<int>& support) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(phi.cols());
  if (support.empty()) return a;
  Eigen::MatrixXd sub(phi.rows(), static_cast<Eigen::Index>(support.size()));
  for (size_t c = 0; c < support.size(); ++c) {
    const int idx = support[c];
    if (idx < 0 || idx >= phi.cols())
      throw std::invalid_argument("least_squares_restricted: index out of range");
    sub.col(static_cast<Eigen::Index>(c)) = phi.col(idx);
  }
  const Eigen::VectorXd coef =
      sub.completeOrthogonalDecomposition().solve(f);
  for (size_t c = 0; c < support.size(); ++c)
    a[support[c]] = coef[static_cast<Eigen::Index>(c)];
  return a;
}

namespace detail {

inline std::vector<int> nonzero_support(const Eigen::VectorXd& a) {
  std::vector<int> s;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] != 0.0) s.push_back(static_cast<int>(i));
  return s;
}

inline double recompute_residual(const Eigen::MatrixXd& phi,
                                 const Eigen::VectorXd& f,
                                 const Eigen::VectorXd& a) {
  return (phi * a - f).norm();
}

inline std::string join_ints(const std::vector<int>& v) {
  std::ostringstream out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    out << v[i];
  }
  return out.str();
}

inline std::string fmt(double v) {
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

// Greedy residual-minimizing column selection, tracked with an incremental
// orthogonalization so each step costs O(l*K): picking argmax_j
// |phi_j_perp . r| / ||phi_j_perp|| is exactly the column whose inclusion
// minimizes the refit residual.
struct OlsPath {
  std::vector<int> order;            // columns in selection order
  std::vector<double> residuals;     // projection residual after each pick
  double initial_residual = 0.0;     // ||f||
};

inline OlsPath ols_selection_path(const Eigen::MatrixXd& phi,
                                  const Eigen::VectorXd& f) {
  const Eigen::Index l = phi.rows(), K = phi.cols();
  OlsPath path;
  path.initial_residual = f.norm();
  Eigen::MatrixXd work = phi;  // candidate columns, orthogonalized in place
  Eigen::VectorXd r = f;
  std::vector<bool> used(static_cast<size_t>(K), false);
  const Eigen::Index max_steps = std::min(l, K);
  for (Eigen::Index step = 0; step < max_steps; ++step) {
    int best = -1;
    double best_gain = 0.0;
    for (Eigen::Index j = 0; j < K; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      const double nrm2 = work.col(j).squaredNorm();
      if (nrm2 <= 1e-24) continue;  // already in the span
      const double proj = work.col(j).dot(r);
      const double gain = proj * proj / nrm2;
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<int>(j);
      }
    }
    if (best < 0 || best_gain <= 0.0) break;
    used[static_cast<size_t>(best)] = true;
    const Eigen::VectorXd q = work.col(best) / work.col(best).norm();
    // deflate the residual and remaining candidates against the new direction
    r -= q * q.dot(r);
    for (Eigen::Index j = 0; j < K; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      work.col(j) -= q * q.dot(work.col(j));
    }
    path.order.push_back(best);
    path.residuals.push_back(r.norm());
  }
  return path;
}

}  // namespace detail

// Minimum-2-norm least squares via a rank-revealing factorization.
inline SparseSolution solve_ls(const Eigen::MatrixXd& phi,
                               const Eigen::VectorXd& f) {
  if (phi.rows() != f.size() || phi.rows() < 1)
    throw std::invalid_argument("solve_ls: shape mismatch");
  SparseSolution sol;
  sol.solver_id = SolverId::ls;
  sol.coefficients = phi.completeOrthogonalDecomposition().solve(f);
  sol.support = detail::nonzero_support(sol.coefficients);
  sol.residual_norm = detail::recompute_residual(phi, f, sol.coefficients);
  return sol;
}

inline SparseSolution solve_ls(const BasisMatrix& phi, const Eigen::VectorXd& f) {
  return solve_ls(phi.values, f);
}

// Greedy forward selection: repeatedly add the column that minimizes the
// least-squares residual, stop once the residual reaches the threshold, then
// refit on the selected support.
inline SparseSolution solve_ols(const Eigen::MatrixXd& phi,
                                const Eigen::VectorXd& f, double threshold) {
  if (threshold <= 0.0)
    throw std::invalid_argument("solve_ols: threshold must be positive");
  SparseSolution sol;
  sol.solver_id = SolverId::ols;
  sol.hyperparams["threshold"] = detail::fmt(threshold);

  const auto path = detail::ols_selection_path(phi, f);
  std::vector<int> support;
  if (path.initial_residual > threshold) {
    for (size_t s = 0; s < path.order.size(); ++s) {
      support.push_back(path.order[s]);
      if (path.residuals[s] <= threshold) break;
    }
  }
  std::sort(support.begin(), support.end());
  sol.support = support;
  sol.coefficients = least_squares_restricted(phi, f, support);
  sol.residual_norm = detail::recompute_residual(phi, f, sol.coefficients);
  return sol;
}

inline SparseSolution solve_ols(const BasisMatrix& phi, const Eigen::VectorXd& f,
                                double threshold) {
  return solve_ols(phi.values, f, threshold);
}

// Shared K-fold selection: returns the grid index with the smallest held-out
// squared residual, lowest index winning ties. Folds are deterministic
// round-robin slices.
inline size_t cross_validate_min_residual(
    const Eigen::MatrixXd& phi, const Eigen::VectorXd& f, int n_folds,
    const std::vector<double>& grid,
    const std::function<Eigen::VectorXd(const Eigen::MatrixXd&,
                                        const Eigen::VectorXd&, double)>& fit,
    std::vector<double>* scores_out = nullptr) {
  const Eigen::Index l = phi.rows();
  if (grid.empty()) throw std::invalid_argument("cross-validation: empty grid");
  if (n_folds < 2 || static_cast<Eigen::Index>(n_folds) > l)
    throw std::invalid_argument("cross-validation: need 2 <= folds <= samples");

  std::vector<double> scores(grid.size(), 0.0);
  for (int fold = 0; fold < n_folds; ++fold) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < l; ++i)
      (i % n_folds == fold ? test : train).push_back(i);
    Eigen::MatrixXd phi_tr(static_cast<Eigen::Index>(train.size()), phi.cols());
    Eigen::VectorXd f_tr(static_cast<Eigen::Index>(train.size()));
    for (size_t i = 0; i < train.size(); ++i) {
      phi_tr.row(static_cast<Eigen::Index>(i)) = phi.row(train[i]);
      f_tr[static_cast<Eigen::Index>(i)] = f[train[i]];
    }
    Eigen::MatrixXd phi_te(static_cast<Eigen::Index>(test.size()), phi.cols());
    Eigen::VectorXd f_te(static_cast<Eigen::Index>(test.size()));
    for (size_t i = 0; i < test.size(); ++i) {
      phi_te.row(static_cast<Eigen::Index>(i)) = phi.row(test[i]);
      f_te[static_cast<Eigen::Index>(i)] = f[test[i]];
    }
    for (size_t g = 0; g < grid.size(); ++g) {
      const Eigen::VectorXd a = fit(phi_tr, f_tr, grid[g]);
      scores[g] += (phi_te * a - f_te).squaredNorm();
    }
  }
  size_t best = 0;
  for (size_t g = 1; g < scores.size(); ++g)
    if (scores[g] < scores[best]) best = g;
  if (scores_out) *scores_out = scores;
  return best;
}

// OLS with the stopping threshold chosen by cross-validation, refit on all
// data with the winner.
inline SparseSolution solve_ols_cv(const Eigen::MatrixXd& phi,
                                   const Eigen::VectorXd& f,
                                   const CrossValidationPlan& plan) {
  std::vector<double> grid = plan.grid;
  if (grid.empty()) grid = log_grid(1e-6, 100.0, 50);
  const size_t best = cross_validate_min_residual(
      phi, f, plan.n_folds, grid,
      [](const Eigen::MatrixXd& p, const Eigen::VectorXd& y, double t) {
        return solve_ols(p, y, t).coefficients;
      });
  SparseSolution sol = solve_ols(phi, f, grid[best]);
  sol.hyperparams["cv_folds"] = std::to_string(plan.n_folds);
  sol.hyperparams["cv_grid_size"] = std::to_string(grid.size());
  return sol;
}

inline SparseSolution solve_ols_cv(const BasisMatrix& phi,
                                   const Eigen::VectorXd& f,
                                   const CrossValidationPlan& plan) {
  return solve_ols_cv(phi.values, f, plan);
}

// Cyclic coordinate descent for ||phi a - f||^2 + lambda ||a||_1; coordinate
// updates are exact scalar soft-thresholds, so zeros are exact.
inline SparseSolution solve_lasso(const Eigen::MatrixXd& phi,
                                  const Eigen::VectorXd& f, double lambda) {
  if (lambda < 0.0)
    throw std::invalid_argument("solve_lasso: lambda must be nonnegative");
  const Eigen::Index K = phi.cols();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd r = f;  // residual f - phi a, maintained incrementally
  Eigen::VectorXd col_norm2(K);
  for (Eigen::Index j = 0; j < K; ++j) col_norm2[j] = phi.col(j).squaredNorm();

  const int max_sweeps = 50000;
  const double tol = 1e-8;
  bool converged = false;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_step = 0.0;
    for (Eigen::Index j = 0; j < K; ++j) {
      if (col_norm2[j] <= 0.0) continue;
      const double old = a[j];
      const double rho = phi.col(j).dot(r) + col_norm2[j] * old;
      const double thr = 0.5 * lambda;
      double next = 0.0;
      if (rho > thr)
        next = (rho - thr) / col_norm2[j];
      else if (rho < -thr)
        next = (rho + thr) / col_norm2[j];
      if (next != old) {
        r += phi.col(j) * (old - next);
        a[j] = next;
        max_step = std::max(max_step, std::abs(next - old));
      }
    }
    if (max_step < tol) {
      converged = true;
      break;
    }
  }

  SparseSolution sol;
  sol.solver_id = SolverId::lasso;
  sol.coefficients = a;
  sol.support = detail::nonzero_support(a);
  sol.residual_norm = detail::recompute_residual(phi, f, a);
  sol.hyperparams["lambda"] = detail::fmt(lambda);
  sol.hyperparams["sweeps"] = std::to_string(sweep + 1);
  sol.hyperparams["converged"] = converged ? "true" : "false";
  return sol;
}

inline SparseSolution solve_lasso(const BasisMatrix& phi, const Eigen::VectorXd& f,
                                  double lambda) {
  return solve_lasso(phi.values, f, lambda);
}

namespace detail {

// Euclidean projection onto {x : ||phi x - f|| <= eps} using the SVD of phi:
// the row-space coordinates solve a one-parameter secular equation, the
// null-space component passes through untouched.
struct BallProjector {
  Eigen::MatrixXd U, V;
  Eigen::VectorXd sigma, g;  // singular values; U^T f over positive modes
  double f_perp2 = 0.0;      // ||f||^2 minus the captured part
  double eps = 0.0;
  bool feasible = true;

  BallProjector(const Eigen::MatrixXd& phi, const Eigen::VectorXd& f,
                double epsilon)
      : eps(epsilon) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(phi,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = sv.size() ? sv[0] * 1e-13 : 0.0;
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv[rank] > cutoff) ++rank;
    U = svd.matrixU().leftCols(rank);
    V = svd.matrixV().leftCols(rank);
    sigma = sv.head(rank);
    g = U.transpose() * f;
    f_perp2 = std::max(0.0, f.squaredNorm() - g.squaredNorm());
    feasible = f_perp2 <= eps * eps + 1e-18;
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const {
    const Eigen::VectorXd cv = V.transpose() * v;
    Eigen::VectorXd miss = sigma.cwiseProduct(cv) - g;
    const double eps2 = std::max(0.0, eps * eps - f_perp2);
    if (miss.squaredNorm() <= eps2) return v;  // already inside the ball
    // h(mu) = sum ((sigma_i cv_i - g_i)/(1 + mu sigma_i^2))^2 decreases
    // monotonically; bisect on mu
    auto h = [&](double mu) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        const double d = miss[i] / (1.0 + mu * sigma[i] * sigma[i]);
        s += d * d;
      }
      return s;
    };
    double lo = 0.0, hi = 1.0;
    while (h(hi) > eps2 && hi < 1e18) hi *= 4.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) > eps2 ? lo : hi) = mid;
    }
    const double mu = hi;
    Eigen::VectorXd c(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
      c[i] = (cv[i] + mu * sigma[i] * g[i]) / (1.0 + mu * sigma[i] * sigma[i]);
    return V * c + (v - V * cv);
  }
};

}  // namespace detail

// min ||a||_1 subject to ||phi a - f|| <= eps, by operator splitting: one side
// projects onto the residual ball exactly, the other soft-thresholds.
inline SparseSolution solve_cs(const Eigen::MatrixXd& phi,
                               const Eigen::VectorXd& f, double epsilon) {
  if (epsilon < 0.0)
    throw std::invalid_argument("solve_cs: epsilon must be nonnegative");
  const Eigen::Index K = phi.cols();
  detail::BallProjector project(phi, f, epsilon);

  SparseSolution sol;
  sol.solver_id = SolverId::cs;
  sol.hyperparams["epsilon"] = detail::fmt(epsilon);

  if (!project.feasible) {
    // no coefficient vector can reach the ball: report the closest LS point
    sol.coefficients = phi.completeOrthogonalDecomposition().solve(f);
    sol.support = detail::nonzero_support(sol.coefficients);
    sol.residual_norm = detail::recompute_residual(phi, f, sol.coefficients);
    sol.hyperparams["feasible"] = "false";
    sol.hyperparams["converged"] = "false";
    return sol;
  }

  const double rho = 1.0;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(K);
  const int max_iter = 20000;
  bool converged = false;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    a = project(b - u);
    Eigen::VectorXd b_prev = b;
    const Eigen::VectorXd w = a + u;
    const double thr = 1.0 / rho;
    for (Eigen::Index j = 0; j < K; ++j) {
      if (w[j] > thr)
        b[j] = w[j] - thr;
      else if (w[j] < -thr)
        b[j] = w[j] + thr;
      else
        b[j] = 0.0;
    }
    u += a - b;
    const double primal = (a - b).cwiseAbs().maxCoeff();
    const double dual = (b - b_prev).cwiseAbs().maxCoeff();
    if (primal < 1e-9 && dual < 1e-8) {
      converged = true;
      break;
    }
  }

  sol.coefficients = b;
  sol.support = detail::nonzero_support(b);
  sol.residual_norm = detail::recompute_residual(phi, f, b);
  sol.hyperparams["feasible"] = "true";
  sol.hyperparams["converged"] = converged ? "true" : "false";
  sol.hyperparams["iterations"] = std::to_string(iter + 1);
  return sol;
}

inline SparseSolution solve_cs(const BasisMatrix& phi, const Eigen::VectorXd& f,
                               double epsilon) {
  return solve_cs(phi.values, f, epsilon);
}

// Sequential thresholded least squares: fit, zero coefficients below lambda,
// refit on the survivors, repeat until the support stops changing.
inline SparseSolution solve_sindy(const Eigen::MatrixXd& phi,
                                  const Eigen::VectorXd& f, double lambda) {
  if (lambda <= 0.0)
    throw std::invalid_argument("solve_sindy: lambda must be positive");
  std::vector<int> support(static_cast<size_t>(phi.cols()));
  for (size_t i = 0; i < support.size(); ++i) support[i] = static_cast<int>(i);

  Eigen::VectorXd a;
  while (true) {
    a = least_squares_restricted(phi, f, support);
    std::vector<int> kept;
    for (int i : support)
      if (std::abs(a[i]) >= lambda) kept.push_back(i);
    if (kept.size() == support.size()) break;
    support = std::move(kept);
    if (support.empty()) {
      a = Eigen::VectorXd::Zero(phi.cols());
      break;
    }
  }

  SparseSolution sol;
  sol.solver_id = SolverId::sindy;
  sol.coefficients = a;
  sol.support = support;
  sol.residual_norm = detail::recompute_residual(phi, f, a);
  sol.hyperparams["lambda"] = detail::fmt(lambda);
  return sol;
}

inline SparseSolution solve_sindy(const BasisMatrix& phi, const Eigen::VectorXd& f,
                                  double lambda) {
  return solve_sindy(phi.values, f, lambda);
}

// Thresholded LS alternating with residual-based trimming: rows whose current
// residual magnitude exceeds mu * ||r||_2 / sqrt(l) are treated as corrupted
// and excluded from the next fit. The trusted set is re-derived from scratch
// each round, so a row can be readmitted.
inline SparseSolution solve_tw(const Eigen::MatrixXd& phi,
                               const Eigen::VectorXd& f, double lambda,
                               double mu, double tol) {
  if (lambda <= 0.0 || mu <= 0.0 || tol <= 0.0)
    throw std::invalid_argument("solve_tw: lambda, mu, tol must be positive");
  const Eigen::Index l = phi.rows();
  std::vector<Eigen::Index> trusted(static_cast<size_t>(l));
  for (Eigen::Index i = 0; i < l; ++i) trusted[static_cast<size_t>(i)] = i;

  Eigen::VectorXd a = Eigen::VectorXd::Zero(phi.cols());
  std::vector<int> support;
  const int max_rounds = 100;
  int round = 0;
  for (; round < max_rounds; ++round) {
    Eigen::MatrixXd phi_t(static_cast<Eigen::Index>(trusted.size()), phi.cols());
    Eigen::VectorXd f_t(static_cast<Eigen::Index>(trusted.size()));
    for (size_t i = 0; i < trusted.size(); ++i) {
      phi_t.row(static_cast<Eigen::Index>(i)) = phi.row(trusted[i]);
      f_t[static_cast<Eigen::Index>(i)] = f[trusted[i]];
    }
    SparseSolution inner = solve_sindy(phi_t, f_t, lambda);
    const Eigen::VectorXd a_next = inner.coefficients;

    const Eigen::VectorXd r = phi * a_next - f;
    const double cut = mu * r.norm() / std::sqrt(static_cast<double>(l));
    std::vector<Eigen::Index> next_trusted;
    for (Eigen::Index i = 0; i < l; ++i)
      if (std::abs(r[i]) <= cut) next_trusted.push_back(i);
    if (next_trusted.empty())
      throw std::runtime_error(
          "solve_tw: every row trimmed as corrupted; mu too small for this data");

    const double change = (a_next - a).cwiseAbs().maxCoeff();
    a = a_next;
    support = inner.support;
    trusted = std::move(next_trusted);
    if (change < tol) break;
  }

  std::vector<int> trimmed;
  {
    std::vector<bool> keep(static_cast<size_t>(l), false);
    for (Eigen::Index i : trusted) keep[static_cast<size_t>(i)] = true;
    for (Eigen::Index i = 0; i < l; ++i)
      if (!keep[static_cast<size_t>(i)]) trimmed.push_back(static_cast<int>(i));
  }

  SparseSolution sol;
  sol.solver_id = SolverId::tw;
  sol.coefficients = a;
  sol.support = support;
  sol.residual_norm = detail::recompute_residual(phi, f, a);
  sol.hyperparams["lambda"] = detail::fmt(lambda);
  sol.hyperparams["mu"] = detail::fmt(mu);
  sol.hyperparams["tol"] = detail::fmt(tol);
  sol.hyperparams["rounds"] = std::to_string(round + 1);
  sol.hyperparams["trimmed_rows"] = detail::join_ints(trimmed);
  return sol;
}

inline SparseSolution solve_tw(const BasisMatrix& phi, const Eigen::VectorXd& f,
                               double lambda, double mu, double tol) {
  return solve_tw(phi.values, f, lambda, mu, tol);
}

}  // namespace entreg
