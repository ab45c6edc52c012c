#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace entreg {

// One polynomial candidate function: a product of state powers.
struct Monomial {
  Eigen::VectorXi exponents;

  int degree() const { return exponents.sum(); }

  template <typename Derived>
  typename Derived::Scalar eval(const Eigen::MatrixBase<Derived>& z) const {
    using Scalar = typename Derived::Scalar;
    Scalar v = Scalar(1);
    for (int i = 0; i < exponents.size(); ++i)
      for (int e = 0; e < exponents[i]; ++e) v *= z[i];
    return v;
  }
};

inline std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

namespace detail {
inline void enumerate_degree(int dims_left, int deg_left, Eigen::VectorXi& cur,
                             int pos, std::vector<Monomial>& out) {
  if (pos == cur.size() - 1) {
    cur[pos] = deg_left;
    out.push_back({cur});
    return;
  }
  // descending leading exponent gives lexicographic-descending order
  for (int e = deg_left; e >= 0; --e) {
    cur[pos] = e;
    enumerate_degree(dims_left - 1, deg_left - e, cur, pos + 1, out);
  }
}
}  // namespace detail

// All monomials of total degree <= max_degree, graded lexicographic:
// constant first, then each degree block in lex-descending exponent order.
inline std::vector<Monomial> enumerate_monomials(int state_dim, int max_degree) {
  if (state_dim < 1) throw std::invalid_argument("state_dim must be >= 1");
  std::vector<Monomial> out;
  out.reserve(static_cast<size_t>(binomial(state_dim + max_degree, max_degree)));
  Eigen::VectorXi cur(state_dim);
  for (int deg = 0; deg <= max_degree; ++deg)
    detail::enumerate_degree(state_dim, deg, cur, 0, out);
  return out;
}

template <typename Scalar>
struct BasisMatrixT {
  std::vector<Monomial> columns;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> values;  // l x K
  int state_dim = 0;
  int max_degree = 0;

  int n_columns() const { return static_cast<int>(columns.size()); }

  // column index of the monomial with the given exponents, -1 if absent
  int index_of(const Eigen::VectorXi& exps) const {
    for (size_t k = 0; k < columns.size(); ++k)
      if (columns[k].exponents == exps) return static_cast<int>(k);
    return -1;
  }
};

using BasisMatrix = BasisMatrixT<double>;

// Evaluate the full polynomial expansion on every sample row of `states`.
template <typename Derived>
BasisMatrixT<typename Derived::Scalar> build_basis_matrix(
    const Eigen::MatrixBase<Derived>& states, int max_degree) {
  using Scalar = typename Derived::Scalar;
  if (states.rows() == 0) throw std::invalid_argument("empty sample series");
  BasisMatrixT<Scalar> b;
  b.state_dim = static_cast<int>(states.cols());
  b.max_degree = max_degree;
  b.columns = enumerate_monomials(b.state_dim, max_degree);
  b.values.resize(states.rows(), static_cast<Eigen::Index>(b.columns.size()));
  for (Eigen::Index t = 0; t < states.rows(); ++t) {
    const auto row = states.row(t);
    for (size_t k = 0; k < b.columns.size(); ++k)
      b.values(t, static_cast<Eigen::Index>(k)) = b.columns[k].eval(row.transpose());
  }
  return b;
}

// Optional per-column max-abs scaling for badly conditioned expansions.
// Returns the scale factors applied; columns with all-zero values keep scale 1.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> scale_columns(BasisMatrixT<Scalar>& b) {
  Eigen::Vector<Scalar, Eigen::Dynamic> s(b.values.cols());
  for (Eigen::Index k = 0; k < b.values.cols(); ++k) {
    const Scalar m = b.values.col(k).cwiseAbs().maxCoeff();
    s[k] = (m > Scalar(0)) ? m : Scalar(1);
    b.values.col(k) /= s[k];
  }
  return s;
}

}  // namespace entreg
