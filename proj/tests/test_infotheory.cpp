#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <entreg/infotheory.hpp>
#include <entreg/rng.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace entreg;
using Eigen::MatrixXd;

namespace {

MatrixXd uniform_block(Eigen::Index l, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(l, d);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index c = 0; c < d; ++c) m(i, c) = rng.uniform();
  return m;
}

MatrixXd normal_block(Eigen::Index l, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(l, d);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index c = 0; c < d; ++c) m(i, c) = rng.normal();
  return m;
}

double brute_kth(const MatrixXd& pts, Eigen::Index i, int k) {
  std::vector<double> d;
  for (Eigen::Index j = 0; j < pts.rows(); ++j) {
    if (j == i) continue;
    d.push_back((pts.row(j) - pts.row(i)).cwiseAbs().maxCoeff());
  }
  std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
  return d[static_cast<size_t>(k - 1)];
}

Eigen::Index brute_count(const MatrixXd& pts, Eigen::Index i, double r) {
  Eigen::Index n = 0;
  for (Eigen::Index j = 0; j < pts.rows(); ++j) {
    if (j == i) continue;
    if ((pts.row(j) - pts.row(i)).cwiseAbs().maxCoeff() < r) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("digamma matches known anchors and the recurrence") {
  CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-13));
  CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-13));
  CHECK(digamma(2.0) == doctest::Approx(0.42278433509846714).epsilon(1e-13));
  for (double x : {0.3, 1.0, 2.5, 4.0, 7.7, 33.0, 1500.0}) {
    CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-11));
  }
  CHECK_THROWS_AS(digamma(0.0), std::invalid_argument);
}

TEST_CASE("spatial index agrees with brute force") {
  for (Eigen::Index dim : {1, 3, 25}) {  // 25 exercises the linear-scan path
    MatrixXd pts = uniform_block(400, dim, 17 + static_cast<std::uint64_t>(dim));
    // plant exact duplicates and near-ties
    pts.row(50) = pts.row(10);
    pts.row(51) = pts.row(10);
    pts.row(52) = pts.row(11);
    MaxNormIndex index(pts);
    for (Eigen::Index i : {0, 10, 50, 51, 120, 399}) {
      for (int k : {1, 2, 3, 7}) {
        CHECK(index.kth_distance(i, k) == brute_kth(pts, i, k));
      }
      // radii equal to actual inter-point distances probe the strict boundary
      const double d1 = brute_kth(pts, i, 1);
      const double d3 = brute_kth(pts, i, 3);
      for (double r : {0.0, d1, d3, 0.5 * (d1 + d3), 0.2, 1.5}) {
        CHECK(index.count_within(i, r) == brute_count(pts, i, r));
      }
    }
  }
  MatrixXd two = MatrixXd::Zero(2, 2);
  MaxNormIndex tiny(two);
  CHECK(tiny.kth_distance(0, 1) == 0.0);
  CHECK_THROWS_AS(tiny.kth_distance(0, 2), std::invalid_argument);
  CHECK(tiny.count_within(0, -1.0) == 0);
}

TEST_CASE("independent samples score near zero") {
  std::vector<double> vals;
  for (std::uint64_t s : {1, 2, 3}) {
    MatrixXd x = uniform_block(2000, 1, 100 + s);
    MatrixXd y = uniform_block(2000, 1, 200 + s);
    vals.push_back(std::abs(estimate_mi(x, y, 2)));
  }
  std::sort(vals.begin(), vals.end());
  CHECK(vals[1] <= 0.05);  // median of three seeds
}

TEST_CASE("correlated gaussians match the closed form") {
  const double rho = 0.9;
  Rng rng(7);
  MatrixXd x(5000, 1), y(5000, 1);
  for (int i = 0; i < 5000; ++i) {
    const double n1 = rng.normal(), n2 = rng.normal();
    x(i, 0) = n1;
    y(i, 0) = rho * n1 + std::sqrt(1 - rho * rho) * n2;
  }
  const double expected = -0.5 * std::log(1 - rho * rho);  // 0.8304
  CHECK(std::abs(estimate_mi(x, y, 2) - expected) <= 0.05);
}

TEST_CASE("self-information diverges with sample count") {
  MatrixXd x1 = normal_block(1000, 1, 5);
  MatrixXd x2 = normal_block(2000, 1, 5);
  const double m1 = estimate_mi(x1, x1, 2);
  const double m2 = estimate_mi(x2, x2, 2);
  CHECK(m1 > 2.0);
  CHECK(m2 > m1 + 0.3);  // tracks psi(l) growth
}

TEST_CASE("conditioning on x itself removes all information") {
  MatrixXd x = normal_block(2000, 1, 21);
  MatrixXd y = normal_block(2000, 1, 22);
  CHECK(std::abs(estimate_cmi(x, y, x, 2)) <= 0.05);
  // also when y depends on x strongly
  MatrixXd y2 = 2.0 * x + 0.1 * normal_block(2000, 1, 23);
  CHECK(std::abs(estimate_cmi(x, y2, x, 2)) <= 0.05);
}

TEST_CASE("gaussian partial correlation oracle") {
  const double rho = 0.8;
  Rng rng(31);
  MatrixXd x(5000, 1), y(5000, 1), z(5000, 1);
  for (int i = 0; i < 5000; ++i) {
    const double w = rng.normal(), u = rng.normal(), v = rng.normal();
    z(i, 0) = w;
    x(i, 0) = w + u;
    y(i, 0) = w + rho * u + std::sqrt(1 - rho * rho) * v;
  }
  const double expected = -0.5 * std::log(1 - rho * rho);  // 0.5108
  CHECK(std::abs(estimate_cmi(x, y, z, 2) - expected) <= 0.06);
}

TEST_CASE("empty conditioning block reduces to plain mi") {
  MatrixXd x = uniform_block(500, 2, 41);
  MatrixXd y = uniform_block(500, 1, 42);
  CHECK(estimate_cmi(x, y, MatrixXd(), 2) == estimate_mi(x, y, 2));
}

TEST_CASE("jointly permuting rows leaves estimates unchanged exactly") {
  MatrixXd x = uniform_block(500, 1, 51);
  MatrixXd y = uniform_block(500, 1, 52);
  MatrixXd z = uniform_block(500, 1, 53);
  // inject exact duplicates to stress tie handling
  for (int i = 0; i < 50; ++i) {
    x.row(2 * i + 1) = x.row(2 * i);
    y.row(2 * i + 1) = y.row(2 * i);
    z.row(2 * i + 1) = z.row(2 * i);
  }
  const double mi = estimate_mi(x, y, 2);
  const double cmi = estimate_cmi(x, y, z, 2);

  Rng rng(99);
  const auto p = rng.permutation(500);
  MatrixXd xp(500, 1), yp(500, 1), zp(500, 1);
  for (int i = 0; i < 500; ++i) {
    xp.row(i) = x.row(static_cast<Eigen::Index>(p[static_cast<size_t>(i)]));
    yp.row(i) = y.row(static_cast<Eigen::Index>(p[static_cast<size_t>(i)]));
    zp.row(i) = z.row(static_cast<Eigen::Index>(p[static_cast<size_t>(i)]));
  }
  CHECK(estimate_mi(xp, yp, 2) == mi);
  CHECK(estimate_cmi(xp, yp, zp, 2) == cmi);
}

TEST_CASE("coarsely quantized data does not break the estimators") {
  Rng rng(61);
  MatrixXd x(800, 1), y(800, 1);
  for (int i = 0; i < 800; ++i) {
    x(i, 0) = std::floor(5.0 * rng.uniform());
    y(i, 0) = std::floor(5.0 * rng.uniform());
  }
  const double v = estimate_mi(x, y, 2);
  CHECK(std::isfinite(v));
  CHECK(std::abs(v) < 0.5);
  CHECK(estimate_mi(x, y, 2) == v);  // deterministic
}

TEST_CASE("shuffle threshold is seed-deterministic") {
  MatrixXd x = uniform_block(300, 1, 71);
  MatrixXd y = uniform_block(300, 1, 72);
  ShuffleTestConfig cfg;
  cfg.seed = 5;
  cfg.n_shuffles = 20;
  const double t1 = shuffle_threshold(x, y, MatrixXd(), 2, cfg);
  const double t2 = shuffle_threshold(x, y, MatrixXd(), 2, cfg);
  CHECK(t1 == t2);
  cfg.seed = 6;
  CHECK(shuffle_threshold(x, y, MatrixXd(), 2, cfg) != t1);
}

TEST_CASE("a single shuffle ignores alpha") {
  MatrixXd x = uniform_block(300, 1, 81);
  MatrixXd y = uniform_block(300, 1, 82);
  ShuffleTestConfig lo, hi;
  lo.alpha = 0.05;
  hi.alpha = 0.95;
  lo.n_shuffles = hi.n_shuffles = 1;
  lo.seed = hi.seed = 9;
  CHECK(shuffle_threshold(x, y, MatrixXd(), 2, lo) ==
        shuffle_threshold(x, y, MatrixXd(), 2, hi));
}

TEST_CASE("threshold calibration on independent data") {
  // fresh independent pairs should fall under the 95% threshold ~95% of the
  // time; demand at least 90/100
  int below = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto s = static_cast<std::uint64_t>(rep);
    MatrixXd x = uniform_block(256, 1, 1000 + s);
    MatrixXd y = uniform_block(256, 1, 2000 + s);
    ShuffleTestConfig cfg;
    cfg.seed = 3000 + s;
    const double tol = shuffle_threshold(x, y, MatrixXd(), 2, cfg);
    MatrixXd xf = uniform_block(256, 1, 4000 + s);
    MatrixXd yf = uniform_block(256, 1, 5000 + s);
    below += estimate_mi(xf, yf, 2) < tol;
  }
  CHECK(below >= 90);
}

TEST_CASE("strong dependence clears the threshold") {
  int detected = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = static_cast<std::uint64_t>(rep);
    MatrixXd x = normal_block(1000, 1, 6000 + s);
    MatrixXd y = x + 0.1 * normal_block(1000, 1, 7000 + s);
    ShuffleTestConfig cfg;
    cfg.seed = 8000 + s;
    const double tol = shuffle_threshold(x, y, MatrixXd(), 2, cfg);
    detected += estimate_mi(x, y, 2) > tol;
  }
  CHECK(detected >= 19);
}

TEST_CASE("argument validation") {
  MatrixXd x = uniform_block(10, 1, 1);
  MatrixXd y = uniform_block(9, 1, 2);
  CHECK_THROWS_AS(estimate_mi(x, y, 2), std::invalid_argument);
  MatrixXd y10 = uniform_block(10, 1, 3);
  CHECK_THROWS_AS(estimate_mi(x, y10, 10), std::invalid_argument);
  CHECK_THROWS_AS(estimate_mi(x, y10, 0), std::invalid_argument);
  ShuffleTestConfig bad;
  bad.alpha = 1.0;
  CHECK_THROWS_AS(shuffle_threshold(x, y10, MatrixXd(), 2, bad),
                  std::invalid_argument);
  bad.alpha = 0.95;
  bad.n_shuffles = 0;
  CHECK_THROWS_AS(shuffle_threshold(x, y10, MatrixXd(), 2, bad),
                  std::invalid_argument);
}
