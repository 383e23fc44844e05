#include <cmath>
#include <random>

#include <doctest.h>

#include "resist/solvers.hpp"
#include "test_support.hpp"

using namespace resist;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// f(x) = 1/2 <Ax, x> - <b, x> with a power regularizer.
CompositeProblem quadratic(const MatrixXd& a, const VectorXd& b, double sigma, double power, double holder) {
  CompositeProblem pb;
  pb.smooth_oracle = [a, b](const VectorXd& x) {
    const VectorXd ax = a * x;
    return OracleAnswer{0.5 * x.dot(ax) - b.dot(x), ax - b};
  };
  pb.reg = Regularizer(sigma, power, 2.0);
  pb.dim = b.size();
  pb.nu = 1.0;
  pb.holder = holder;
  return pb;
}

MatrixXd random_psd(std::mt19937_64& rng, Index n) {
  MatrixXd m(n, n);
  for (Index j = 0; j < n; ++j) m.col(j) = testing::gaussian(rng, n);
  return m.transpose() * m / double(n);
}

double objective(const CompositeProblem& pb, const VectorXd& x) {
  return pb.smooth_oracle(x).value + reg_value(pb.reg, x);
}

std::vector<double> accepted_values(const RunRecord& rec) {
  std::vector<double> out;
  for (std::size_t c : rec.iterate_calls) out.push_back(rec.value_curve[c]);
  return out;
}

const std::vector<std::string> kBuiltin = {"subgradient", "prox_grad", "fgm", "fgm_restart"};

}  // namespace

TEST_CASE("subgradient method on a shifted one-dimensional quadratic") {
  // f(x) = 1/2 (x - 1)^2 = 1/2 x^2 - x + 1/2; the constant does not affect the method.
  const auto pb = quadratic(MatrixXd::Identity(1, 1), VectorXd::Ones(1), 1e-8, 2.0, 1.0);
  const RunRecord rec = subgradient_method(pb, 100);
  const double f_star = -0.5 / (1.0 + 1e-8);
  const double f0 = objective(pb, VectorXd::Zero(1));
  CHECK(rec.oracle_calls == 100);
  CHECK(rec.best_value - f_star <= (f0 - f_star) * 1e-2);
}

TEST_CASE("trivial budgets and fixed points") {
  const auto pb = quadratic(MatrixXd::Identity(2, 2), VectorXd::Ones(2), 1.0, 2.0, 1.0);
  for (const std::string id : {"subgradient", "prox_grad", "fgm", "fgm_restart"}) {
    const RunRecord rec = method_by_id(id)(pb, 1);
    CHECK(rec.oracle_calls == 1);
    CHECK(rec.queries.size() == 1);
    CHECK(rec.queries[0].isZero(0.0));
    CHECK(rec.method_id == id);
  }

  CompositeProblem zero;
  zero.smooth_oracle = [](const VectorXd& x) { return OracleAnswer{0.0, VectorXd::Zero(x.size())}; };
  zero.reg = Regularizer(1.0, 2.0, 2.0);
  zero.dim = 3;
  for (const std::string id : {"subgradient", "prox_grad", "fgm", "fgm_restart"}) {
    const RunRecord rec = method_by_id(id)(zero, 30);
    for (const auto& q : rec.queries) CHECK(q.isZero(0.0));
  }
}

TEST_CASE("proximal gradient converges to the solution of the linear system") {
  MatrixXd a(2, 2);
  a << 2.0, 0.5, 0.5, 1.0;
  const VectorXd b = Eigen::Vector2d(1.0, -1.0);
  const double sigma = 1e-8;
  const auto pb = quadratic(a, b, sigma, 2.0, 2.5);
  const VectorXd x_star = (a + sigma * MatrixXd::Identity(2, 2)).ldlt().solve(b);
  const double f_star = objective(pb, x_star);
  const double f0 = objective(pb, VectorXd::Zero(2));

  const RunRecord rec = prox_gradient(pb, 200);
  CHECK(rec.oracle_calls == 200);
  CHECK(rec.best_value - f_star <= 1e-12 * (f0 - f_star));
  CHECK((rec.best_point() - x_star).norm() <= 1e-6);

  // Geometric decrease on the accepted iterates: every 10 accepted steps gain a factor 2 at least.
  const auto vals = accepted_values(rec);
  for (std::size_t k = 10; k < vals.size(); ++k) {
    if (vals[k - 10] - f_star < 1e-13) break;
    CHECK(vals[k] - f_star <= 0.5 * (vals[k - 10] - f_star));
  }
}

TEST_CASE("proximal gradient stays at an optimal start and is monotone") {
  const auto at_opt = quadratic(MatrixXd::Identity(3, 3), VectorXd::Zero(3), 1.0, 3.0, 1.0);
  const RunRecord fixed = prox_gradient(at_opt, 20);
  for (std::size_t c : fixed.iterate_calls) CHECK(fixed.queries[c].norm() <= 1e-12);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const MatrixXd a = random_psd(rng, 5);
    const VectorXd b = testing::gaussian(rng, 5);
    const auto pb = quadratic(a, b, 0.5, 3.0, 1.0);
    const auto vals = accepted_values(prox_gradient(pb, 100));
    for (std::size_t k = 1; k < vals.size(); ++k) REQUIRE(vals[k] <= vals[k - 1]);
  }
}

TEST_CASE("fast gradient method on a one-dimensional quadratic") {
  const double lip = 4.0;
  const double sigma = 1e-8;
  const auto pb = quadratic(lip * MatrixXd::Identity(1, 1), lip * VectorXd::Ones(1), sigma, 2.0, lip);
  const double x_star = lip / (lip + sigma);
  const double f_star = objective(pb, VectorXd::Constant(1, x_star));
  const RunRecord rec = fgm_composite(pb, 64);
  CHECK(rec.oracle_calls == 64);
  CHECK(rec.best_value - f_star <= 2.0 * lip * x_star * x_star / (64.0 * 64.0) * 1.1);
}

TEST_CASE("fast gradient method meets its rate on quadratics with a cubic term") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const MatrixXd a = random_psd(rng, 6);
    const VectorXd b = testing::gaussian(rng, 6);
    const double h1 = Eigen::SelfAdjointEigenSolver<MatrixXd>(a).eigenvalues().maxCoeff();
    const auto pb = quadratic(a, b, 0.3, 3.0, h1);
    const ReferenceSolution ref = reference_solve(pb, 1e-13);
    const double r2 = ref.x.squaredNorm();

    const RunRecord rec = fgm_composite(pb, 400);
    CHECK(rec.lipschitz_estimate > 0.0);
    for (std::size_t k = 1; k <= rec.iterate_calls.size(); ++k) {
      const double residual = rec.value_curve[rec.iterate_calls[k - 1]] - ref.value;
      const double kk = double(k * k);
      REQUIRE(residual <= 2.0 * rec.lipschitz_estimate * r2 / kk * 1.25 + 1e-13);
      REQUIRE(residual <= 4.0 * h1 * r2 / kk + 1e-13);
    }
  }
}

TEST_CASE("restarted method equals one fast gradient run inside the first round") {
  std::mt19937_64 rng(7);
  const MatrixXd a = random_psd(rng, 4);
  const VectorXd b = testing::gaussian(rng, 4);
  const auto pb = quadratic(a, b, 1.0, 3.0, 1.0);
  for (std::size_t budget = 1; budget <= kRestartFirstRound; ++budget) {
    const RunRecord r1 = fgm_composite(pb, budget);
    const RunRecord r2 = fgm_restart(pb, budget);
    REQUIRE(r1.queries.size() == r2.queries.size());
    for (std::size_t i = 0; i < r1.queries.size(); ++i) REQUIRE(r1.queries[i] == r2.queries[i]);
    REQUIRE(r1.value_curve == r2.value_curve);
  }
}

TEST_CASE("reference solutions of small problems") {
  // f(x) = x, sigma = 1, p = 2: F'(x) = 1 + x.
  CompositeProblem linear;
  linear.smooth_oracle = [](const VectorXd& x) { return OracleAnswer{x(0), VectorXd::Ones(1)}; };
  linear.reg = Regularizer(1.0, 2.0, 2.0);
  linear.dim = 1;
  linear.nu = 0.0;
  const ReferenceSolution s = reference_solve(linear, 1e-12);
  CHECK(std::abs(s.x(0) + 1.0) <= 1e-5);
  CHECK(std::abs(s.value + 0.5) <= 1e-11);

  CompositeProblem zero;
  zero.smooth_oracle = [](const VectorXd& x) { return OracleAnswer{0.0, VectorXd::Zero(x.size())}; };
  zero.reg = Regularizer(1.0, 3.0, 2.0);
  zero.dim = 2;
  const ReferenceSolution z = reference_solve(zero, 1e-12);
  CHECK(z.x.norm() == 0.0);
  CHECK(z.value == 0.0);

  CHECK_THROWS_AS(reference_solve(linear, 1e-12, 1500), ConvergenceError);
  try {
    reference_solve(linear, 1e-12, 1500);
  } catch (const ConvergenceError& e) {
    // only one run fits under the cap, so no gap was ever measured
    CHECK(std::isinf(e.last_gap()));
  }
}

TEST_CASE("methods read the problem only through the oracle") {
  std::mt19937_64 rng(9);
  const MatrixXd a = random_psd(rng, 5);
  const VectorXd b = testing::gaussian(rng, 5);
  const auto base = quadratic(a, b, 0.7, 3.0, 1.0);
  for (const std::string& id : kBuiltin) {
    std::vector<VectorXd> seen;
    CompositeProblem counted = base;
    counted.smooth_oracle = [&seen, &base](const VectorXd& x) {
      seen.push_back(x);
      return base.smooth_oracle(x);
    };
    const RunRecord rec = method_by_id(id)(counted, 57);
    CHECK(seen.size() == 57);
    CHECK(rec.oracle_calls == 57);
    CHECK(rec.value_curve.size() == 57);
    REQUIRE(rec.queries.size() == seen.size());
    for (std::size_t i = 0; i < seen.size(); ++i) CHECK(rec.queries[i] == seen[i]);
    CHECK(rec.best_value == *std::min_element(rec.value_curve.begin(), rec.value_curve.end()));
  }
}

TEST_CASE("methods are deterministic") {
  std::mt19937_64 rng(10);
  const MatrixXd a = random_psd(rng, 4);
  const VectorXd b = testing::gaussian(rng, 4);
  const auto pb = quadratic(a, b, 0.2, 4.0, 1.0);
  for (const std::string& id : kBuiltin) {
    const RunRecord r1 = method_by_id(id)(pb, 80);
    const RunRecord r2 = method_by_id(id)(pb, 80);
    REQUIRE(r1.queries.size() == r2.queries.size());
    for (std::size_t i = 0; i < r1.queries.size(); ++i) CHECK(r1.queries[i] == r2.queries[i]);
  }
}

TEST_CASE("error paths") {
  CompositeProblem nan_problem;
  nan_problem.smooth_oracle = [](const VectorXd& x) {
    return OracleAnswer{std::nan(""), VectorXd::Zero(x.size())};
  };
  nan_problem.reg = Regularizer(1.0, 3.0, 2.0);
  nan_problem.dim = 2;
  for (const std::string& id : kBuiltin) {
    CHECK_THROWS_AS(method_by_id(id)(nan_problem, 5), NumericalError);
  }

  CHECK_THROWS_AS(method_by_id("newton"), ConfigError);
  CHECK_THROWS_AS(method_supports("newton", 2.0), ConfigError);
  CHECK(method_supports("subgradient", 1.0));
  CHECK_FALSE(method_supports("fgm", 1.0));

  auto l1 = quadratic(MatrixXd::Identity(2, 2), VectorXd::Ones(2), 1.0, 3.0, 1.0);
  l1.reg = Regularizer(1.0, 3.0, 1.0);
  CHECK_THROWS_AS(prox_gradient(l1, 5), UnsupportedError);
  CHECK_THROWS_AS(fgm_composite(l1, 5), UnsupportedError);
  CHECK_THROWS_AS(fgm_restart(l1, 5), UnsupportedError);
  CHECK(subgradient_method(l1, 5).oracle_calls == 5);
  CHECK_THROWS_AS(subgradient_method(l1, 0), ConfigError);
}

TEST_CASE("residual curves") {
  const auto pb = quadratic(MatrixXd::Identity(1, 1), VectorXd::Ones(1), 1.0, 2.0, 1.0);
  RunRecord rec = prox_gradient(pb, 10);
  attach_residuals(rec, -0.25);
  REQUIRE(rec.residual_curve);
  for (std::size_t i = 0; i < rec.value_curve.size(); ++i) {
    CHECK((*rec.residual_curve)[i] == rec.value_curve[i] + 0.25);
  }
}
