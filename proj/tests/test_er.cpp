#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <entreg/dynamics.hpp>
#include <entreg/er.hpp>
#include <entreg/rng.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace entreg;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

// Lorenz trajectory recorded every 5th integration step, ready for the
// differentiation -> dictionary pipeline.
TimeSeriesSet strided_lorenz(int n_samples, int stride = 5) {
  auto ts = simulate_lorenz(10.0, 28.0, 8.0 / 3.0, Vector3d(1, 1, 1), 0.0005,
                            stride * (n_samples + 1));
  TimeSeriesSet out;
  out.dt = ts.dt * stride;
  out.times.resize(n_samples + 2);
  out.states.resize(n_samples + 2, 3);
  for (int t = 0; t < n_samples + 2; ++t) {
    out.times[t] = ts.times[stride * t];
    out.states.row(t) = ts.states.row(stride * t);
  }
  return out;
}

struct InverseProblem {
  BasisMatrix phi;
  MatrixXd f;
};

InverseProblem lorenz_problem(const TimeSeriesSet& recorded,
                              const NoiseModel* noise = nullptr) {
  TimeSeriesSet obs = noise ? inject_noise(recorded, *noise) : recorded;
  auto dd = estimate_derivatives(obs, DerivScheme::central);
  return {build_basis_matrix(dd.aligned.states, 5), dd.f};
}

void check_trace_consistency(const MatrixXd& phi, const VectorXd& f,
                             const SparseSolution& sol, const ErTrace& trace) {
  const int K = static_cast<int>(phi.cols());

  std::set<int> picked;
  for (const auto& step : trace.forward_steps) {
    CHECK(step.index >= 0);
    CHECK(step.index < K);
    CHECK(picked.insert(step.index).second);  // no index selected twice
    CHECK(std::isfinite(step.cmi));
    CHECK(std::isfinite(step.tolerance));
    CHECK(step.cmi > step.tolerance);  // accepted steps cleared the bar
  }

  std::set<int> removed;
  for (const auto& rem : trace.backward_removals) {
    CHECK(picked.count(rem.index) == 1);
    CHECK(removed.insert(rem.index).second);
  }

  std::set<int> expected;
  for (int j : picked)
    if (!removed.count(j)) expected.insert(j);
  CHECK(std::vector<int>(expected.begin(), expected.end()) ==
        trace.final_support);
  CHECK(sol.support == trace.final_support);

  for (int j = 0; j < K; ++j) {
    if (!expected.count(j)) CHECK(sol.coefficients[j] == 0.0);
  }
  const VectorXd refit = regress_on_support(phi, f, sol.support);
  CHECK((refit - sol.coefficients).cwiseAbs().maxCoeff() <= 1e-13);
  const double re = (phi * sol.coefficients - f).norm();
  CHECK(std::abs(sol.residual_norm - re) <= 1e-12 * (1.0 + re));
}

}  // namespace

TEST_CASE("restricted least squares matches full and empty baselines") {
  MatrixXd phi = random_matrix(120, 8, 301);
  VectorXd f = phi * VectorXd::LinSpaced(8, -1.0, 2.5);
  f[7] += 0.3;

  std::vector<int> all(8);
  for (int j = 0; j < 8; ++j) all[j] = j;
  const VectorXd full = regress_on_support(phi, f, all);
  const auto ls = solve_ls(phi, f);
  CHECK((full - ls.coefficients).cwiseAbs().maxCoeff() <= 1e-12);

  const VectorXd empty = regress_on_support(phi, f, {});
  CHECK(empty.size() == 8);
  CHECK(empty.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("restricted least squares recovers exact coefficients on the true support") {
  auto recorded = strided_lorenz(500);
  auto prob = lorenz_problem(recorded);
  auto gt = lorenz_ground_truth(10.0, 28.0, 8.0 / 3.0, 5);

  for (int dim = 0; dim < 3; ++dim) {
    // synthesize a target exactly in the span of the true columns
    const VectorXd truth = gt.coefficients.col(dim);
    const VectorXd f = prob.phi.values * truth;
    const VectorXd a = regress_on_support(prob.phi.values, f, gt.support[dim]);
    CHECK((a - truth).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("a single exact dictionary term is selected in one forward step") {
  MatrixXd phi = random_matrix(300, 10, 2024);
  VectorXd f = 2.0 * phi.col(5);

  ErConfig cfg;
  cfg.seed = 7;
  const auto trace = forward_er(phi, f, cfg);

  REQUIRE(trace.forward_steps.size() == 1);
  CHECK(trace.forward_steps[0].index == 5);
  CHECK(trace.final_support == std::vector<int>{5});
  CHECK(trace.forward_steps[0].cmi > 1.0);  // near-deterministic dependence
}

TEST_CASE("independent noise targets usually leave the forward support empty") {
  // The stop rule compares a maximum over dictionary candidates against a
  // threshold calibrated from a single shuffled-target draw, so a minority of
  // runs accept one near-threshold term; with these pinned seeds 17 of 20
  // runs stop immediately and no false accept grows past two terms.
  auto recorded = strided_lorenz(1000);
  MatrixXd states = recorded.states.topRows(1000);
  auto phi = build_basis_matrix(states, 5);

  int empty = 0;
  for (int s = 0; s < 20; ++s) {
    Rng rng(derive_seed(42, s));
    VectorXd f(1000);
    for (int i = 0; i < 1000; ++i) f[i] = rng.normal();

    ErConfig cfg;
    cfg.seed = derive_seed(4242, s);
    const auto trace = forward_er(phi.values, f, cfg);
    if (trace.final_support.empty())
      ++empty;
    else
      CHECK(trace.final_support.size() <= 2);
  }
  CHECK(empty >= 15);
}

TEST_CASE("forward stage keeps the true linear terms under heavy outlier noise") {
  auto recorded = strided_lorenz(1500);

  int hits = 0;
  for (int s = 0; s < 10; ++s) {
    NoiseModel nm;
    nm.eps1 = 1e-5;
    nm.eps2 = 0.2;
    nm.p = 0.2;
    nm.seed = derive_seed(777, s);
    auto prob = lorenz_problem(recorded, &nm);

    ErConfig cfg;
    cfg.seed = derive_seed(31337, s);
    const auto trace = forward_er(prob.phi.values, prob.f.col(0), cfg);
    const auto& sup = trace.final_support;
    const bool has = std::count(sup.begin(), sup.end(), 1) &&
                     std::count(sup.begin(), sup.end(), 2);
    hits += has;
  }
  CHECK(hits >= 9);
}

TEST_CASE("backward stage keeps every term of an exact model") {
  auto recorded = strided_lorenz(600);
  auto prob = lorenz_problem(recorded);
  auto gt = lorenz_ground_truth(10.0, 28.0, 8.0 / 3.0, 5);

  ErConfig cfg;
  cfg.seed = 5;
  const auto trace =
      backward_er(prob.phi.values, prob.f.col(1), gt.support[1], cfg, 0.2);
  CHECK(trace.backward_removals.empty());
  CHECK(trace.final_support == gt.support[1]);
}

TEST_CASE("backward stage prunes a term the target does not depend on") {
  MatrixXd phi = random_matrix(400, 6, 555);
  Rng noise(556);
  VectorXd f = phi.col(0) + phi.col(1);
  for (int i = 0; i < 400; ++i) f[i] += 0.05 * noise.normal();

  ErConfig cfg;
  cfg.seed = 7;
  const auto trace = backward_er(phi, f, {0, 1, 2}, cfg, 0.15);

  REQUIRE(trace.backward_removals.size() == 1);
  CHECK(trace.backward_removals[0].index == 2);
  CHECK(trace.backward_removals[0].cmi < 0.15);
  CHECK(trace.final_support == std::vector<int>{0, 1});
}

TEST_CASE("a nonpositive tolerance makes the backward stage a no-op") {
  MatrixXd phi = random_matrix(200, 5, 808);
  Rng noise(809);
  VectorXd f = phi.col(3);
  for (int i = 0; i < 200; ++i) f[i] += 0.5 * noise.normal();

  ErConfig cfg;
  cfg.seed = 9;
  for (double tol : {0.0, -0.5}) {
    const auto trace = backward_er(phi, f, {0, 3, 4}, cfg, tol);
    CHECK(trace.backward_removals.empty());
    CHECK(trace.final_support == std::vector<int>{0, 3, 4});
  }
}

TEST_CASE("double-well outlier regression lands on the quadratic-quartic pair") {
  auto d = make_double_well();
  auto phi = build_basis_matrix(d.states, 10);

  ErConfig cfg;
  cfg.seed = 11;
  const auto [sol, trace] = entropic_regression(phi.values, d.target, cfg);

  CHECK(sol.support == std::vector<int>{2, 4});
  CHECK(std::abs(sol.coefficients[2] - (-0.93421)) <= 0.02);
  CHECK(std::abs(sol.coefficients[4] - 0.94463) <= 0.02);
  CHECK(std::abs(sol.residual_norm - 0.69038) <= 0.01);
  check_trace_consistency(phi.values, d.target, sol, trace);
}

TEST_CASE("full pipeline recovers the exact chaotic structure under gentle noise") {
  auto recorded = strided_lorenz(1500);
  auto gt = lorenz_ground_truth(10.0, 28.0, 8.0 / 3.0, 5);

  for (int s = 0; s < 3; ++s) {
    NoiseModel nm;
    nm.eps1 = 1e-4;
    nm.seed = derive_seed(888, s);
    auto prob = lorenz_problem(recorded, &nm);

    for (int dim = 0; dim < 3; ++dim) {
      ErConfig cfg;
      cfg.seed = derive_seed(99991, s * 3 + dim);
      const auto [sol, trace] =
          entropic_regression(prob.phi.values, prob.f.col(dim), cfg);
      CHECK(sol.support == gt.support[dim]);
      const VectorXd truth = gt.coefficients.col(dim);
      for (int j : gt.support[dim])
        CHECK(std::abs(sol.coefficients[j] - truth[j]) <=
              0.02 * std::max(1.0, std::abs(truth[j])));
      check_trace_consistency(prob.phi.values, prob.f.col(dim), sol, trace);
    }
  }
}

TEST_CASE("identical configurations reproduce the identical trace") {
  auto recorded = strided_lorenz(600);
  auto prob = lorenz_problem(recorded);

  ErConfig cfg;
  cfg.seed = 424242;
  const auto [s1, t1] = entropic_regression(prob.phi.values, prob.f.col(2), cfg);
  const auto [s2, t2] = entropic_regression(prob.phi.values, prob.f.col(2), cfg);

  CHECK(s1.support == s2.support);
  CHECK((s1.coefficients - s2.coefficients).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(t1.forward_steps.size() == t2.forward_steps.size());
  for (size_t i = 0; i < t1.forward_steps.size(); ++i) {
    CHECK(t1.forward_steps[i].index == t2.forward_steps[i].index);
    CHECK(t1.forward_steps[i].cmi == t2.forward_steps[i].cmi);
    CHECK(t1.forward_steps[i].tolerance == t2.forward_steps[i].tolerance);
  }
  REQUIRE(t1.backward_removals.size() == t2.backward_removals.size());
  for (size_t i = 0; i < t1.backward_removals.size(); ++i)
    CHECK(t1.backward_removals[i].index == t2.backward_removals[i].index);
}

TEST_CASE("rescaling the target by a power of two leaves the selection intact") {
  // distances, fitted predictions, and the shuffle threshold all scale by the
  // same exact factor, so every neighbor count and comparison is unchanged
  auto recorded = strided_lorenz(600);
  auto prob = lorenz_problem(recorded);

  ErConfig cfg;
  cfg.seed = 424242;
  const VectorXd f = prob.f.col(0);
  const auto [s1, t1] = entropic_regression(prob.phi.values, f, cfg);
  const auto [s2, t2] =
      entropic_regression(prob.phi.values, (4.0 * f).eval(), cfg);

  CHECK(s1.support == s2.support);
  REQUIRE(t1.forward_steps.size() == t2.forward_steps.size());
  for (size_t i = 0; i < t1.forward_steps.size(); ++i) {
    CHECK(t1.forward_steps[i].index == t2.forward_steps[i].index);
    CHECK(t1.forward_steps[i].cmi == t2.forward_steps[i].cmi);
  }
  CHECK((4.0 * s1.coefficients - s2.coefficients).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward term cap is honored") {
  auto recorded = strided_lorenz(600);
  auto prob = lorenz_problem(recorded);

  ErConfig cfg;
  cfg.seed = 31;
  cfg.max_forward_terms = 1;
  auto trace = forward_er(prob.phi.values, prob.f.col(1), cfg);
  CHECK(trace.forward_steps.size() == 1);
  CHECK(trace.final_support.size() == 1);

  cfg.max_forward_terms = 0;
  trace = forward_er(prob.phi.values, prob.f.col(1), cfg);
  CHECK(trace.forward_steps.empty());
  CHECK(trace.final_support.empty());
}

TEST_CASE("static tolerance is calibrated once and reused at every step") {
  auto recorded = strided_lorenz(600);
  auto prob = lorenz_problem(recorded);

  ErConfig cfg;
  cfg.seed = 98765;
  const auto trace = forward_er(prob.phi.values, prob.f.col(1), cfg);
  REQUIRE(trace.forward_steps.size() >= 2);
  for (const auto& step : trace.forward_steps)
    CHECK(step.tolerance == trace.forward_steps[0].tolerance);
}

TEST_CASE("dynamic tolerance starts at zero and tightens after each step") {
  auto recorded = strided_lorenz(600);
  auto prob = lorenz_problem(recorded);

  ErConfig cfg;
  cfg.seed = 13579;
  cfg.tolerance_mode = ToleranceMode::dynamical;
  const auto trace = forward_er(prob.phi.values, prob.f.col(0), cfg);

  REQUIRE(!trace.forward_steps.empty());
  CHECK(trace.forward_steps[0].tolerance == 0.0);
  for (size_t i = 1; i < trace.forward_steps.size(); ++i)
    CHECK(std::isfinite(trace.forward_steps[i].tolerance));
  const auto& sup = trace.final_support;
  CHECK(std::count(sup.begin(), sup.end(), 1) == 1);
  CHECK(std::count(sup.begin(), sup.end(), 2) == 1);
}

TEST_CASE("solution metadata identifies the solver and the search effort") {
  auto d = make_double_well();
  auto phi = build_basis_matrix(d.states, 10);

  ErConfig cfg;
  cfg.seed = 11;
  const auto [sol, trace] = entropic_regression(phi.values, d.target, cfg);

  CHECK(sol.solver_id == SolverId::er);
  CHECK(sol.hyperparams.at("knn_k") == "2");
  CHECK(sol.hyperparams.at("forward_steps") ==
        std::to_string(trace.forward_steps.size()));
  CHECK(sol.hyperparams.at("backward_removals") ==
        std::to_string(trace.backward_removals.size()));
}
