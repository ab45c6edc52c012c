#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <entreg/kdtree.hpp>
#include <entreg/rng.hpp>

namespace entreg {

inline double digamma(double x) {
  if (x <= 0.0) throw std::invalid_argument("digamma: nonpositive argument");
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli-number expansion through x^-10; first dropped term is below
  // 1e-13 once the recurrence has pushed x past 10
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 -
                                    inv2 * (1.0 / 240.0 - inv2 / 132.0))));
  return result;
}

struct ShuffleTestConfig {
  double alpha = 0.95;
  int n_shuffles = 100;
  std::uint64_t seed = 0;
};

namespace detail {

inline double u64_to_signed_unit(std::uint64_t u) {
  return 2.0 * ((u >> 11) * 0x1.0p-53) - 1.0;
}

inline std::uint64_t hash_row(const Eigen::MatrixXd& m, Eigen::Index row) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    std::uint64_t bits;
    const double v = m(row, c);
    std::memcpy(&bits, &v, sizeof(bits));
    h = splitmix64(h ^ bits);
  }
  return h;
}

// Deterministic tie-breaking: rows with identical content — beyond the first
// member of each duplicate group — receive a content-and-rank-derived jitter
// of magnitude 1e-12 times the per-dimension range. Distinct rows are left
// untouched, so generic continuous data is estimated on its exact values.
// The perturbed point multiset depends only on the row contents, so jointly
// permuting the rows of all blocks permutes points without changing any
// estimate.
inline Eigen::MatrixXd jitter_rows(const Eigen::MatrixXd& joint) {
  const Eigen::Index l = joint.rows();
  const Eigen::Index d = joint.cols();
  Eigen::VectorXd scale(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double range = joint.col(c).maxCoeff() - joint.col(c).minCoeff();
    scale[c] = 1e-12 * range;  // constant columns stay constant
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(l));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < d; ++c) {
      if (joint(a, c) < joint(b, c)) return true;
      if (joint(a, c) > joint(b, c)) return false;
    }
    return false;
  };
  auto row_eq = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < d; ++c)
      if (joint(a, c) != joint(b, c)) return false;
    return true;
  };
  std::sort(order.begin(), order.end(), row_less);

  Eigen::MatrixXd out = joint;
  size_t run = 0;
  while (run < order.size()) {
    size_t end = run + 1;
    while (end < order.size() && row_eq(order[run], order[end])) ++end;
    if (end == run + 1) {  // unique row: no ties to break
      run = end;
      continue;
    }
    const std::uint64_t key = hash_row(joint, order[run]);
    for (size_t r = run + 1; r < end; ++r) {
      const std::uint64_t rank = static_cast<std::uint64_t>(r - run);
      const Eigen::Index i = order[r];
      for (Eigen::Index c = 0; c < d; ++c) {
        if (scale[c] == 0.0) continue;
        const std::uint64_t u = splitmix64(
            splitmix64(key ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(c + 1))) ^
            rank);
        out(i, c) += scale[c] * u64_to_signed_unit(u);
      }
    }
    run = end;
  }
  return out;
}

// Order-independent reduction: summing sorted values makes the mean invariant
// to how points were indexed.
inline double sorted_mean(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(terms.size());
}

inline void check_pair(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int k,
                       const char* what) {
  if (x.rows() != y.rows())
    throw std::invalid_argument(std::string(what) + ": row-count mismatch");
  if (x.cols() < 1 || y.cols() < 1)
    throw std::invalid_argument(std::string(what) + ": empty block");
  if (k < 1 || x.rows() <= k)
    throw std::invalid_argument(std::string(what) + ": need n > k >= 1");
}

}  // namespace detail

// Mutual information I(X;Y) in nats, Kraskov-Stoegbauer-Grassberger first
// variant: psi(k) + psi(n) - <psi(n_x+1) + psi(n_y+1)>, with max-norm
// neighborhoods and strictly-inside marginal counts.
inline double estimate_mi(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          int k) {
  detail::check_pair(x, y, k, "estimate_mi");
  const Eigen::Index l = x.rows();
  Eigen::MatrixXd joint(l, x.cols() + y.cols());
  joint << x, y;
  joint = detail::jitter_rows(joint);

  MaxNormIndex jidx(joint);
  MaxNormIndex xidx(joint.leftCols(x.cols()));
  MaxNormIndex yidx(joint.rightCols(y.cols()));

  std::vector<double> terms(static_cast<size_t>(l));
  for (Eigen::Index i = 0; i < l; ++i) {
    const double eps = jidx.kth_distance(i, k);
    const auto nx = xidx.count_within(i, eps);
    const auto ny = yidx.count_within(i, eps);
    terms[static_cast<size_t>(i)] =
        digamma(static_cast<double>(nx) + 1.0) + digamma(static_cast<double>(ny) + 1.0);
  }
  return digamma(k) + digamma(static_cast<double>(l)) - detail::sorted_mean(terms);
}

// Conditional mutual information I(X;Y|Z) in nats, Frenzel-Pompe construction:
// psi(k) - <psi(n_xz+1) + psi(n_yz+1) - psi(n_z+1)>. An empty Z reduces to
// plain mutual information.
inline double estimate_cmi(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                           const Eigen::MatrixXd& z, int k) {
  if (z.cols() == 0) return estimate_mi(x, y, k);
  detail::check_pair(x, y, k, "estimate_cmi");
  if (z.rows() != x.rows())
    throw std::invalid_argument("estimate_cmi: row-count mismatch");

  const Eigen::Index l = x.rows();
  const Eigen::Index dx = x.cols(), dy = y.cols(), dz = z.cols();
  Eigen::MatrixXd joint(l, dx + dy + dz);
  joint << x, y, z;
  joint = detail::jitter_rows(joint);

  Eigen::MatrixXd xz(l, dx + dz), yz(l, dy + dz);
  xz << joint.leftCols(dx), joint.rightCols(dz);
  yz << joint.middleCols(dx, dy), joint.rightCols(dz);

  MaxNormIndex jidx(joint);
  MaxNormIndex xzidx(std::move(xz));
  MaxNormIndex yzidx(std::move(yz));
  MaxNormIndex zidx(joint.rightCols(dz));

  std::vector<double> terms(static_cast<size_t>(l));
  for (Eigen::Index i = 0; i < l; ++i) {
    const double eps = jidx.kth_distance(i, k);
    const auto nxz = xzidx.count_within(i, eps);
    const auto nyz = yzidx.count_within(i, eps);
    const auto nz = zidx.count_within(i, eps);
    terms[static_cast<size_t>(i)] =
        digamma(static_cast<double>(nxz) + 1.0) +
        digamma(static_cast<double>(nyz) + 1.0) -
        digamma(static_cast<double>(nz) + 1.0);
  }
  return digamma(k) - detail::sorted_mean(terms);
}

// Significance level for I(X;Y|Z): the alpha-percentile of the estimator's
// null distribution, built by re-estimating with Y's rows freshly permuted.
// Replicas draw independent permutation streams keyed off the config seed, so
// the result is reproducible and independent of evaluation order.
inline double shuffle_threshold(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                const Eigen::MatrixXd& z, int k,
                                const ShuffleTestConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("shuffle_threshold: alpha must lie in (0,1)");
  if (config.n_shuffles < 1)
    throw std::invalid_argument("shuffle_threshold: need at least one shuffle");

  const Eigen::Index l = y.rows();
  std::vector<double> vals(static_cast<size_t>(config.n_shuffles));
  for (int s = 0; s < config.n_shuffles; ++s) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(s)));
    const auto perm = rng.permutation(static_cast<size_t>(l));
    Eigen::MatrixXd yp(l, y.cols());
    for (Eigen::Index t = 0; t < l; ++t)
      yp.row(t) = y.row(static_cast<Eigen::Index>(perm[static_cast<size_t>(t)]));
    vals[static_cast<size_t>(s)] = estimate_cmi(x, yp, z, k);
  }
  std::sort(vals.begin(), vals.end());
  auto idx = static_cast<long>(
      std::ceil(config.alpha * static_cast<double>(config.n_shuffles) - 1e-9));
  idx = std::max<long>(1, std::min<long>(idx, config.n_shuffles));
  return vals[static_cast<size_t>(idx - 1)];
}

}  // namespace entreg
