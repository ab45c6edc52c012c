#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace entreg {

// Exact max-norm neighbor queries over a fixed point set. Points in high
// dimension (D > 20) skip tree construction entirely and use linear scans,
// since axis-aligned splits stop paying for themselves there.
class MaxNormIndex {
 public:
  explicit MaxNormIndex(Eigen::MatrixXd points) : pts_(std::move(points)) {
    const auto n = pts_.rows();
    if (n == 0) throw std::invalid_argument("MaxNormIndex: empty point set");
    row_major_ = pts_;
    perm_.resize(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm_[static_cast<size_t>(i)] = i;
    if (pts_.cols() == 1) {
      // scalars live in a sorted array; queries become binary searches
      sorted_.assign(pts_.data(), pts_.data() + n);
      std::sort(sorted_.begin(), sorted_.end());
    } else if (pts_.cols() <= 20 && n > kLeafSize) {
      nodes_.reserve(static_cast<size_t>(2 * n / kLeafSize + 2));
      root_ = build(0, n);
    }
  }

  // Distance from point i to its k-th nearest other point.
  double kth_distance(Eigen::Index i, int k) const {
    if (k < 1 || k >= pts_.rows())
      throw std::invalid_argument("kth_distance: need 1 <= k < n");
    if (!sorted_.empty()) return kth1d(i, k);
    double stack_buf[kMaxFastK];
    std::vector<double> spill;
    double* storage = stack_buf;
    if (k > kMaxFastK) {
      spill.resize(static_cast<size_t>(k));
      storage = spill.data();
    }
    KBest best{storage, k, 0, std::numeric_limits<double>::infinity()};
    const Eigen::Index d = pts_.cols();
    const double* q = row_buf(i);
    if (root_ < 0) {
      scanKth(0, pts_.rows(), i, q, d, best);
    } else {
      searchKth(root_, i, q, d, best);
    }
    return best.worst;
  }

  // Number of other points strictly inside radius r of point i.
  Eigen::Index count_within(Eigen::Index i, double r) const {
    if (r <= 0.0) return 0;
    if (!sorted_.empty()) return count1d(i, r);
    const Eigen::Index d = pts_.cols();
    const double* q = row_buf(i);
    Eigen::Index count = 0;
    if (root_ < 0) {
      scanCount(0, pts_.rows(), i, q, d, r, count);
    } else {
      searchCount(root_, i, q, d, r, count);
    }
    return count;
  }

 private:
  static constexpr Eigen::Index kLeafSize = 16;
  static constexpr int kMaxFastK = 64;

  // The k smallest distances seen so far, kept in a flat array: for the small
  // k used here this beats a heap, and it avoids per-query allocation.
  struct KBest {
    double* v;
    int cap;
    int size;
    double worst;  // max of the stored distances once full, else infinity

    void push(double d) {
      if (size < cap) {
        v[size++] = d;
        if (size == cap) refresh();
        return;
      }
      for (int i = 0; i < cap; ++i) {
        if (v[i] == worst) {
          v[i] = d;
          break;
        }
      }
      refresh();
    }

    void refresh() {
      worst = v[0];
      for (int i = 1; i < cap; ++i) worst = std::max(worst, v[i]);
    }
  };

  struct Node {
    double split;
    int dim;
    int32_t left = -1, right = -1;   // child node ids; -1 for leaves
    Eigen::Index begin = 0, end = 0; // leaf range into perm_
  };

  // Eigen stores column-major; a row-major copy keeps scans cache-friendly.
  const double* row_buf(Eigen::Index i) const {
    return row_major_.data() + i * pts_.cols();
  }

  double maxNorm(const double* a, const double* b, Eigen::Index d,
                 double bail) const {
    double m = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      const double v = std::abs(a[c] - b[c]);
      if (v > m) {
        m = v;
        if (m >= bail) return m;
      }
    }
    return m;
  }

  int32_t build(Eigen::Index begin, Eigen::Index end) {
    Node node;
    node.begin = begin;
    node.end = end;
    const int32_t id = static_cast<int32_t>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    // split on the dimension with the widest spread in this subset
    const Eigen::Index d = pts_.cols();
    int best_dim = 0;
    double best_spread = -1.0;
    double best_mid = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (Eigen::Index t = begin; t < end; ++t) {
        const double v = pts_(perm_[static_cast<size_t>(t)], c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = static_cast<int>(c);
        best_mid = 0.5 * (lo + hi);
      }
    }
    if (best_spread <= 0.0) return id;  // all points identical: stay a leaf

    auto* base = perm_.data();
    auto* mid = std::partition(base + begin, base + end, [&](Eigen::Index p) {
      return pts_(p, best_dim) < best_mid;
    });
    Eigen::Index split_at = mid - base;
    // rounding can push the midpoint onto the min itself; fall back to a leaf
    if (split_at == begin || split_at == end) return id;
    const int32_t left = build(begin, split_at);
    const int32_t right = build(split_at, end);
    nodes_[static_cast<size_t>(id)].split = best_mid;
    nodes_[static_cast<size_t>(id)].dim = best_dim;
    nodes_[static_cast<size_t>(id)].left = left;
    nodes_[static_cast<size_t>(id)].right = right;
    return id;
  }

  // Scalar k-th neighbor distance: widen a window outward from the query's
  // slot in the sorted order, absorbing the nearer side first.
  double kth1d(Eigen::Index i, int k) const {
    const double q = pts_(i, 0);
    const double inf = std::numeric_limits<double>::infinity();
    size_t l = static_cast<size_t>(
        std::lower_bound(sorted_.begin(), sorted_.end(), q) - sorted_.begin());
    size_t r = l;  // window [l, r] currently holds only the query's own slot
    double kth = 0.0;
    for (int taken = 0; taken < k; ++taken) {
      const double dl = l > 0 ? std::abs(sorted_[l - 1] - q) : inf;
      const double dr = r + 1 < sorted_.size() ? std::abs(sorted_[r + 1] - q) : inf;
      if (dl <= dr) {
        kth = dl;
        --l;
      } else {
        kth = dr;
        ++r;
      }
    }
    return kth;
  }

  // Scalar strict-radius count. |v - q| < r carves a contiguous band out of
  // the sorted order on each side of the query (the rounded difference is
  // monotone in v), so both band edges are found by bisection. The query's
  // own slot always lies inside the band and is discounted.
  Eigen::Index count1d(Eigen::Index i, double r) const {
    const double q = pts_(i, 0);
    const auto qpos = std::lower_bound(sorted_.begin(), sorted_.end(), q);
    const auto lo = std::partition_point(
        sorted_.begin(), qpos, [&](double v) { return !(std::abs(v - q) < r); });
    const auto hi = std::partition_point(
        qpos, sorted_.end(), [&](double v) { return std::abs(v - q) < r; });
    return (hi - lo) - 1;
  }

  void scanKth(Eigen::Index begin, Eigen::Index end, Eigen::Index self,
               const double* q, Eigen::Index d, KBest& best) const {
    for (Eigen::Index t = begin; t < end; ++t) {
      const Eigen::Index j = perm_[static_cast<size_t>(t)];
      if (j == self) continue;
      const double dist = maxNorm(q, row_buf(j), d, best.worst);
      if (dist < best.worst) best.push(dist);
    }
  }

  void searchKth(int32_t id, Eigen::Index self, const double* q,
                 Eigen::Index d, KBest& best) const {
    const Node& node = nodes_[static_cast<size_t>(id)];
    if (node.left < 0) {
      scanKth(node.begin, node.end, self, q, d, best);
      return;
    }
    const double diff = q[node.dim] - node.split;
    const int32_t near = diff < 0.0 ? node.left : node.right;
    const int32_t far = diff < 0.0 ? node.right : node.left;
    searchKth(near, self, q, d, best);
    if (std::abs(diff) < best.worst) searchKth(far, self, q, d, best);
  }

  void scanCount(Eigen::Index begin, Eigen::Index end, Eigen::Index self,
                 const double* q, Eigen::Index d, double r,
                 Eigen::Index& count) const {
    for (Eigen::Index t = begin; t < end; ++t) {
      const Eigen::Index j = perm_[static_cast<size_t>(t)];
      if (j == self) continue;
      if (maxNorm(q, row_buf(j), d, r) < r) ++count;
    }
  }

  void searchCount(int32_t id, Eigen::Index self, const double* q,
                   Eigen::Index d, double r, Eigen::Index& count) const {
    const Node& node = nodes_[static_cast<size_t>(id)];
    if (node.left < 0) {
      scanCount(node.begin, node.end, self, q, d, r, count);
      return;
    }
    const double diff = q[node.dim] - node.split;
    const int32_t near = diff < 0.0 ? node.left : node.right;
    const int32_t far = diff < 0.0 ? node.right : node.left;
    searchCount(near, self, q, d, r, count);
    if (std::abs(diff) < r) searchCount(far, self, q, d, r, count);
  }

  Eigen::MatrixXd pts_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      row_major_;
  std::vector<Eigen::Index> perm_;
  std::vector<Node> nodes_;
  std::vector<double> sorted_;  // scalar fast path; empty when cols > 1
  int32_t root_ = -1;
};

}  // namespace entreg
