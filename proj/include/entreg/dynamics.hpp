#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "basis.hpp"
#include "rng.hpp"

namespace entreg {

struct TimeSeriesSet {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;  // l x N
  double dt = 0.0;

  Eigen::Index n_samples() const { return states.rows(); }
  Eigen::Index dim() const { return states.cols(); }
};

// Mixture observation noise: N(0, eps1^2) with probability 1-p, otherwise
// N(0, eps1^2 + eps2^2). Per scalar entry by default; per_row corrupts a
// whole time sample at once.
struct NoiseModel {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double p = 0.0;
  std::uint64_t seed = 0;
  bool per_row = false;
};

struct GroundTruth {
  Eigen::MatrixXd coefficients;           // K x N
  std::vector<std::vector<int>> support;  // nonzero row indices per dimension

  static GroundTruth from_coefficients(Eigen::MatrixXd c) {
    GroundTruth g;
    g.coefficients = std::move(c);
    g.support.resize(g.coefficients.cols());
    for (Eigen::Index j = 0; j < g.coefficients.cols(); ++j)
      for (Eigen::Index i = 0; i < g.coefficients.rows(); ++i)
        if (g.coefficients(i, j) != 0.0)
          g.support[j].push_back(static_cast<int>(i));
    return g;
  }

  int total_nonzeros() const {
    int n = 0;
    for (const auto& s : support) n += static_cast<int>(s.size());
    return n;
  }
};

namespace detail {

template <typename Rhs>
TimeSeriesSet rk4_integrate(const Eigen::VectorXd& z0, double dt, int steps,
                            Rhs rhs, double bound, const char* what) {
  TimeSeriesSet ts;
  ts.dt = dt;
  ts.times.resize(steps + 1);
  ts.states.resize(steps + 1, z0.size());
  Eigen::VectorXd z = z0;
  ts.times[0] = 0.0;
  ts.states.row(0) = z;
  Eigen::VectorXd k1, k2, k3, k4;
  for (int i = 0; i < steps; ++i) {
    k1 = rhs(z);
    k2 = rhs(z + (0.5 * dt) * k1);
    k3 = rhs(z + (0.5 * dt) * k2);
    k4 = rhs(z + dt * k3);
    z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > bound)
      throw std::runtime_error(std::string(what) + ": trajectory blew up at step " +
                               std::to_string(i + 1));
    ts.times[i + 1] = (i + 1) * dt;
    ts.states.row(i + 1) = z;
  }
  return ts;
}

}  // namespace detail

inline TimeSeriesSet simulate_lorenz(double sigma, double rho, double beta,
                                     const Eigen::Vector3d& z0, double dt,
                                     int steps) {
  if (dt <= 0.0 || steps < 1) throw std::invalid_argument("bad dt/steps");
  auto rhs = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd d(3);
    d[0] = sigma * (z[1] - z[0]);
    d[1] = z[0] * (rho - z[2]) - z[1];
    d[2] = z[0] * z[1] - beta * z[2];
    return d;
  };
  return detail::rk4_integrate(z0, dt, steps, rhs, 1e6, "lorenz");
}

inline GroundTruth lorenz_ground_truth(double sigma, double rho, double beta,
                                       int max_degree) {
  if (max_degree < 2) throw std::invalid_argument("degree must be >= 2");
  const auto mono = enumerate_monomials(3, max_degree);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mono.size()), 3);
  auto at = [&](int e1, int e2, int e3) {
    Eigen::VectorXi e(3);
    e << e1, e2, e3;
    for (size_t k = 0; k < mono.size(); ++k)
      if (mono[k].exponents == e) return static_cast<Eigen::Index>(k);
    throw std::logic_error("monomial not found");
  };
  c(at(1, 0, 0), 0) = -sigma;
  c(at(0, 1, 0), 0) = sigma;
  c(at(1, 0, 0), 1) = rho;
  c(at(0, 1, 0), 1) = -1.0;
  c(at(1, 0, 1), 1) = -1.0;
  c(at(0, 0, 1), 2) = -beta;
  c(at(1, 1, 0), 2) = 1.0;
  return GroundTruth::from_coefficients(std::move(c));
}

// Truncated odd-subspace mode dynamics: a_k' = (k^2 - nu*k^4) a_k - k * conv_k,
// conv_k = sum over m with m, k-m in [-n,n]\{0} of a_m a_{k-m}, a_{-m} = -a_m.
inline TimeSeriesSet simulate_kse_modes(double nu, int n_modes,
                                        const Eigen::VectorXd& a0, double dt,
                                        int steps) {
  if (n_modes < 1 || a0.size() != n_modes) throw std::invalid_argument("bad modes");
  const int n = n_modes;
  auto val = [&](const Eigen::VectorXd& a, int m) {
    return m > 0 ? a[m - 1] : -a[-m - 1];
  };
  auto rhs = [&](const Eigen::VectorXd& a) {
    Eigen::VectorXd d(n);
    for (int k = 1; k <= n; ++k) {
      const double kk = static_cast<double>(k);
      double conv = 0.0;
      for (int m = -n; m <= n; ++m) {
        if (m == 0) continue;
        const int j = k - m;
        if (j == 0 || j < -n || j > n) continue;
        conv += val(a, m) * val(a, j);
      }
      d[k - 1] = (kk * kk - nu * kk * kk * kk * kk) * a[k - 1] - kk * conv;
    }
    return d;
  };
  return detail::rk4_integrate(a0, dt, steps, rhs, 1e6, "kse");
}

inline GroundTruth kse_ground_truth(double nu, int n_modes) {
  if (n_modes < 1) throw std::invalid_argument("bad modes");
  const int n = n_modes;
  const auto mono = enumerate_monomials(n, 2);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mono.size()), n);
  auto at = [&](const Eigen::VectorXi& e) {
    for (size_t k = 0; k < mono.size(); ++k)
      if (mono[k].exponents == e) return static_cast<Eigen::Index>(k);
    throw std::logic_error("monomial not found");
  };
  auto single = [&](int i) {
    Eigen::VectorXi e = Eigen::VectorXi::Zero(n);
    e[i - 1] = 1;
    return at(e);
  };
  auto pair = [&](int i, int j) {
    Eigen::VectorXi e = Eigen::VectorXi::Zero(n);
    e[i - 1] += 1;
    e[j - 1] += 1;
    return at(e);
  };
  for (int k = 1; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    c(single(k), k - 1) = kk * kk - nu * kk * kk * kk * kk;
    for (int i = 1; 2 * i < k; ++i) c(pair(i, k - i), k - 1) = -2.0 * kk;
    if (k % 2 == 0) c(pair(k / 2, k / 2), k - 1) = -kk;
    for (int i = 1; i + k <= n; ++i) c(pair(i, i + k), k - 1) = 2.0 * kk;
  }
  return GroundTruth::from_coefficients(std::move(c));
}

// Laplacian-coupled logistic maps on a graph:
// x_i' = f(x_i) + k * sum_j A_ij (f(x_j) - f(x_i)), f(x) = a x (1 - x).
inline TimeSeriesSet simulate_logistic_network(int n_nodes, double a, double k,
                                               const Eigen::MatrixXi& adjacency,
                                               const Eigen::VectorXd& x0, int steps,
                                               double bound = 1e6) {
  const int n = n_nodes;
  if (adjacency.rows() != n || adjacency.cols() != n || x0.size() != n)
    throw std::invalid_argument("bad adjacency/x0 shape");
  for (int i = 0; i < n; ++i) {
    const int deg = adjacency.row(i).sum();
    if (deg <= 1 || deg > 4)
      throw std::invalid_argument("adjacency degree outside (1,4] at node " +
                                  std::to_string(i));
  }
  TimeSeriesSet ts;
  ts.dt = 1.0;
  ts.times.resize(steps + 1);
  ts.states.resize(steps + 1, n);
  Eigen::VectorXd x = x0, fx(n), nx(n);
  ts.times[0] = 0.0;
  ts.states.row(0) = x;
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < n; ++i) fx[i] = a * x[i] * (1.0 - x[i]);
    for (int i = 0; i < n; ++i) {
      double acc = fx[i];
      for (int j = 0; j < n; ++j)
        if (adjacency(i, j)) acc += k * (fx[j] - fx[i]);
      nx[i] = acc;
    }
    x = nx;
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > bound)
      throw std::runtime_error("logistic network diverged at step " +
                               std::to_string(t + 1));
    ts.times[t + 1] = t + 1;
    ts.states.row(t + 1) = x;
  }
  return ts;
}

inline GroundTruth logistic_ground_truth(int n_nodes, double a, double k,
                                         const Eigen::MatrixXi& adjacency) {
  const int n = n_nodes;
  const auto mono = enumerate_monomials(n, 2);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mono.size()), n);
  auto at = [&](const Eigen::VectorXi& e) {
    for (size_t m = 0; m < mono.size(); ++m)
      if (mono[m].exponents == e) return static_cast<Eigen::Index>(m);
    throw std::logic_error("monomial not found");
  };
  for (int i = 0; i < n; ++i) {
    const int deg = adjacency.row(i).sum();
    const double self_w = 1.0 - k * deg;
    auto add = [&](int node, double w) {
      if (w == 0.0) return;
      Eigen::VectorXi e = Eigen::VectorXi::Zero(n);
      e[node] = 1;
      c(at(e), i) += w * a;  // a*x
      e[node] = 2;
      c(at(e), i) += -w * a;  // -a*x^2
    };
    add(i, self_w);
    for (int j = 0; j < n; ++j)
      if (adjacency(i, j)) add(j, k);
  }
  return GroundTruth::from_coefficients(std::move(c));
}

// Random symmetric adjacency with every degree in {2,3,4} and exactly
// `edges` edges. Greedy over a shuffled edge list, retrying with derived
// seeds until the degree floor holds.
inline Eigen::MatrixXi make_random_adjacency(int n, int edges, std::uint64_t seed,
                                             int max_tries = 1000) {
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all.push_back({i, j});
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    const auto order = rng.permutation(static_cast<int>(all.size()));
    Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
    Eigen::VectorXi deg = Eigen::VectorXi::Zero(n);
    int placed = 0;
    for (int idx : order) {
      if (placed == edges) break;
      const auto [i, j] = all[idx];
      if (deg[i] >= 4 || deg[j] >= 4) continue;
      adj(i, j) = adj(j, i) = 1;
      ++deg[i], ++deg[j];
      ++placed;
    }
    if (placed == edges && (deg.array() >= 2).all()) return adj;
  }
  throw std::runtime_error("could not place adjacency with the degree constraints");
}

// Simulate dx/dt = poly(x) for an arbitrary coefficient matrix over the
// degree-d monomial expansion (used to resimulate recovered models).
inline TimeSeriesSet simulate_poly_model(const Eigen::MatrixXd& coefficients,
                                         int state_dim, int max_degree,
                                         const Eigen::VectorXd& z0, double dt,
                                         int steps, double bound = 1e6) {
  const auto mono = enumerate_monomials(state_dim, max_degree);
  if (coefficients.rows() != static_cast<Eigen::Index>(mono.size()) ||
      coefficients.cols() != state_dim)
    throw std::invalid_argument("coefficient shape does not match the basis");
  auto rhs = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd phi(mono.size());
    for (size_t k = 0; k < mono.size(); ++k) phi[k] = mono[k].eval(z);
    return Eigen::VectorXd(coefficients.transpose() * phi);
  };
  return detail::rk4_integrate(z0, dt, steps, rhs, bound, "poly model");
}

enum class DerivScheme { forward, central, map };

struct DerivativeData {
  Eigen::MatrixXd f;         // l' x N target values
  TimeSeriesSet aligned;     // states aligned row-for-row with f
};

inline DerivativeData estimate_derivatives(const TimeSeriesSet& series,
                                           DerivScheme scheme) {
  const Eigen::Index l = series.n_samples();
  DerivativeData out;
  out.aligned.dt = series.dt;
  switch (scheme) {
    case DerivScheme::central: {
      if (l < 3) throw std::invalid_argument("central scheme needs >= 3 samples");
      out.f.resize(l - 2, series.dim());
      for (Eigen::Index t = 1; t + 1 < l; ++t)
        out.f.row(t - 1) = (series.states.row(t + 1) - series.states.row(t - 1)) /
                           (series.times[t + 1] - series.times[t - 1]);
      out.aligned.times = series.times.segment(1, l - 2);
      out.aligned.states = series.states.middleRows(1, l - 2);
      break;
    }
    case DerivScheme::forward: {
      if (l < 2) throw std::invalid_argument("forward scheme needs >= 2 samples");
      out.f.resize(l - 1, series.dim());
      for (Eigen::Index t = 0; t + 1 < l; ++t)
        out.f.row(t) = (series.states.row(t + 1) - series.states.row(t)) /
                       (series.times[t + 1] - series.times[t]);
      out.aligned.times = series.times.head(l - 1);
      out.aligned.states = series.states.topRows(l - 1);
      break;
    }
    case DerivScheme::map: {
      if (l < 2) throw std::invalid_argument("map scheme needs >= 2 samples");
      out.f = series.states.bottomRows(l - 1);
      out.aligned.times = series.times.head(l - 1);
      out.aligned.states = series.states.topRows(l - 1);
      break;
    }
  }
  return out;
}

inline TimeSeriesSet inject_noise(const TimeSeriesSet& series, const NoiseModel& m) {
  if (m.p < 0.0 || m.p > 1.0 || m.eps1 < 0.0 || m.eps2 < 0.0)
    throw std::invalid_argument("bad noise model");
  if (m.eps1 == 0.0 && m.eps2 == 0.0) return series;  // bit-exact copy
  TimeSeriesSet out = series;
  Rng rng(m.seed);
  const double sd_big = std::sqrt(m.eps1 * m.eps1 + m.eps2 * m.eps2);
  for (Eigen::Index t = 0; t < out.states.rows(); ++t) {
    bool row_outlier = false;
    if (m.per_row) row_outlier = rng.uniform() < m.p;
    for (Eigen::Index i = 0; i < out.states.cols(); ++i) {
      const bool outlier = m.per_row ? row_outlier : (rng.uniform() < m.p);
      out.states(t, i) += (outlier ? sd_big : m.eps1) * rng.normal();
    }
  }
  return out;
}

// The one-dimensional polynomial regression benchmark: a sampled double-well
// curve with a single corrupted reading.
struct RegressionDataset {
  Eigen::MatrixXd states;  // l x 1 sample locations
  Eigen::VectorXd target;
};

inline RegressionDataset make_double_well(int n_samples = 61, double lo = -1.2,
                                          double hi = 1.2, double outlier_x = 0.52,
                                          double outlier_value = 0.5) {
  RegressionDataset d;
  d.states.resize(n_samples, 1);
  d.target.resize(n_samples);
  Eigen::Index hit = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < n_samples; ++t) {
    const double x = lo + (hi - lo) * t / (n_samples - 1);
    d.states(t, 0) = x;
    d.target[t] = x * x * x * x - x * x;
    if (std::abs(x - outlier_x) < best) {
      best = std::abs(x - outlier_x);
      hit = t;
    }
  }
  d.target[hit] = outlier_value;
  return d;
}

inline GroundTruth double_well_ground_truth(int max_degree = 10) {
  const auto mono = enumerate_monomials(1, max_degree);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mono.size()), 1);
  c(2, 0) = -1.0;  // x^2
  c(4, 0) = 1.0;   // x^4
  return GroundTruth::from_coefficients(std::move(c));
}

}  // namespace entreg
