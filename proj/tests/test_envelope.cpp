#include <cmath>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "resist/envelope.hpp"
#include "test_support.hpp"

using namespace resist;
using Eigen::Vector2d;
using Eigen::VectorXd;

TEST_CASE("eval_max picks the largest piece, first index on ties") {
  Chain chain(2, 0.5, {{0, 1, 0.0}, {1, -1, 0.5}});
  const auto m = eval_max(chain, Vector2d(0.2, -0.9));
  CHECK(m.value == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(m.active == 1);

  Chain single(5, 1.0, {{0, 1, 0.0}});
  VectorXd x = VectorXd::Zero(5);
  x(0) = -3.0;
  const auto s = eval_max(single, x);
  CHECK(s.value == -3.0);
  CHECK(s.active == 0);

  Chain tie(2, 1.0, {{0, 1, 0.0}, {1, 1, 0.0}});
  CHECK(eval_max(tie, Vector2d(0.3, 0.3)).active == 0);
}

TEST_CASE("eval_max agrees with a loop over the pieces") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dims(1, 8);
  for (int trial = 0; trial < 500; ++trial) {
    const Index n = dims(rng);
    const Index t = std::uniform_int_distribution<Index>(1, std::min<Index>(5, n))(rng);
    const Chain chain = testing::random_chain(rng, n, t, 2.0);
    const VectorXd x = testing::gaussian(rng, n);
    double best = -1e300;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < chain.size(); ++k) {
      const double v = chain[k].sign * x(chain[k].coord) - chain[k].offset;
      if (v > best) {
        best = v;
        arg = k;
      }
    }
    const auto m = eval_max(chain, x);
    REQUIRE(m.value == best);
    REQUIRE(m.active == arg);
  }
}

TEST_CASE("chain construction and evaluation errors") {
  CHECK_THROWS_AS(Chain(0, 1.0), InputError);
  CHECK_THROWS_AS(Chain(3, 0.0), InputError);
  Chain chain(3, 1.0);
  CHECK_THROWS_AS(eval_max(chain, VectorXd::Zero(3)), InputError);
  chain.push_back({1, 1, 0.0});
  CHECK_THROWS_AS(chain.push_back({1, -1, 1.0}), InputError);
  CHECK_THROWS_AS(chain.push_back({3, 1, 1.0}), InputError);
  CHECK_THROWS_AS(chain.push_back({2, 0, 1.0}), InputError);
  CHECK_THROWS_AS(chain.push_back({2, 1, -1.0}), InputError);
  CHECK_THROWS_AS(eval_max(chain, VectorXd::Zero(2)), InputError);
  CHECK_THROWS_AS(envelope(chain, VectorXd::Zero(4), 1.0), InputError);
  CHECK_THROWS_AS(envelope(chain, VectorXd::Zero(3), 0.0), InputError);
}

TEST_CASE("regular offsets and prefixes") {
  Chain chain(4, 0.25, {{2, 1, 0.0}, {0, -1, 0.25}, {3, 1, 0.5}});
  CHECK(chain.has_regular_offsets());
  CHECK(chain.prefix(2).size() == 2);
  CHECK(chain.prefix(2)[1] == chain[1]);
  Chain skewed(4, 0.25, {{2, 1, 0.0}, {0, -1, 0.3}});
  CHECK_FALSE(skewed.has_regular_offsets());
}

TEST_CASE("simplex projection examples") {
  CHECK(simplex_project(Vector2d(2.0, 0.0)).isApprox(Vector2d(1.0, 0.0)));
  CHECK(simplex_project(Vector2d(0.5, 0.5)).isApprox(Vector2d(0.5, 0.5)));
  // threshold 0.1, cross-checked against bisection on the threshold
  const VectorXd oracle = oracle::simplex_by_bisection(Vector2d(0.8, 0.4));
  CHECK((oracle - Vector2d(0.7, 0.3)).norm() < 1e-14);
  CHECK((simplex_project(Vector2d(0.8, 0.4)) - Vector2d(0.7, 0.3)).norm() < 1e-15);

  Eigen::VectorXd bad(2);
  bad << 1.0, std::nan("");
  CHECK_THROWS_AS(simplex_project(bad), InputError);
  CHECK_THROWS_AS(simplex_project(VectorXd(0)), InputError);
}

TEST_CASE("simplex projection matches bisection and stays feasible at large magnitude") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const Index m = 1 + trial % 7;
    const double scale = std::pow(10.0, double(trial % 9) - 2.0);
    const VectorXd v = testing::gaussian(rng, m, scale);
    const VectorXd p = simplex_project(v);
    REQUIRE(p.minCoeff() >= 0.0);
    REQUIRE(std::abs(p.sum() - 1.0) <= 1e-12);
    if (scale <= 1e3) REQUIRE((p - oracle::simplex_by_bisection(v)).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("envelope of one affine piece shifts by 1/(2 mu)") {
  Chain chain(3, 1.0, {{0, 1, 0.0}});
  const Envelope e = envelope(chain, VectorXd::Zero(3), 2.0);
  CHECK(e.value == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK((e.prox_point - Eigen::Vector3d(-0.5, 0.0, 0.0)).norm() < 1e-15);
  CHECK((e.gradient - Eigen::Vector3d(1.0, 0.0, 0.0)).norm() < 1e-15);

  std::mt19937_64 rng(5);
  for (double mu : {0.1, 1.0, 37.0, 1e6}) {
    const VectorXd x = testing::gaussian(rng, 3, 4.0);
    const Envelope ex = envelope(chain, x, mu);
    CHECK(std::abs((eval_max(chain, x).value - ex.value) - 1.0 / (2.0 * mu)) <= 1e-10);
  }
}

TEST_CASE("two-piece envelope examples agree with the barrier minimizer") {
  Chain chain(2, 1.0, {{0, 1, 0.0}, {1, 1, 0.0}});
  const auto g = testing::to_affine_max(chain);

  const Envelope a = envelope(chain, Vector2d(1.0, 0.0), 1.0);
  CHECK((a.dual_weights - Vector2d(1.0, 0.0)).norm() < 1e-15);
  CHECK(a.prox_point.norm() < 1e-15);
  CHECK(a.value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(oracle::smoothed_min_barrier(g, Vector2d(1.0, 0.0), 1.0) - 0.5) < 1e-9);

  const Envelope b = envelope(chain, Vector2d(0.0, 0.0), 1.0);
  CHECK((b.dual_weights - Vector2d(0.5, 0.5)).norm() < 1e-15);
  CHECK((b.prox_point - Vector2d(-0.5, -0.5)).norm() < 1e-15);
  CHECK(b.value == doctest::Approx(-0.25).epsilon(1e-15));
  VectorXd argmin;
  CHECK(std::abs(oracle::smoothed_min_barrier(g, Vector2d(0.0, 0.0), 1.0, &argmin) + 0.25) < 1e-9);
  CHECK((argmin - Vector2d(-0.5, -0.5)).norm() < 1e-5);
}

TEST_CASE("envelope result invariants and zero duality gap") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const Index n = 1 + trial % 8;
    const Index t = 1 + (trial / 8) % std::min<Index>(5, n);
    const double mu = std::pow(10.0, double(trial % 5) - 1.0);
    const Chain chain = testing::random_chain(rng, n, t, 2.0 / mu);
    const VectorXd x = testing::gaussian(rng, n, trial % 2 ? 1.0 / mu : 1.0);
    const Envelope e = envelope(chain, x, mu);

    REQUIRE(e.dual_weights.minCoeff() >= 0.0);
    REQUIRE(std::abs(e.dual_weights.sum() - 1.0) <= 1e-12);
    REQUIRE((e.gradient - mu * (x - e.prox_point)).norm() <= 1e-12 * (1.0 + mu * x.norm()));
    VectorXd combo = VectorXd::Zero(n);
    for (std::size_t k = 0; k < chain.size(); ++k) combo(chain[k].coord) += chain[k].sign * e.dual_weights(Index(k));
    REQUIRE((combo - e.gradient).norm() <= 1e-15);
    const double primal = eval_max(chain, e.prox_point).value + 0.5 * mu * (e.prox_point - x).squaredNorm();
    REQUIRE(std::abs(primal - e.value) <= 1e-10);
  }
}

TEST_CASE("envelope gradient matches central differences") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const Index n = 1 + trial % 8;
    const Index t = 1 + (trial / 8) % std::min<Index>(5, n);
    const double mu = std::pow(10.0, -1.0 + 3.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    const Chain chain = testing::random_chain(rng, n, t, 2.0 / mu);
    const VectorXd x = testing::gaussian(rng, n, 1.0 / mu);
    const double h = 1e-6 * (1.0 + x.norm());
    const VectorXd fd =
        oracle::central_difference([&](const VectorXd& y) { return envelope(chain, y, mu).value; }, x, h);
    const VectorXd grad = envelope(chain, x, mu).gradient;
    REQUIRE((fd - grad).norm() <= 1e-5 * grad.norm());
  }
}

TEST_CASE("envelope value agrees with a generic minimizer of the smoothing objective") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + trial % 6;
    const Index t = 1 + (trial / 6) % std::min<Index>(4, n);
    const double mu = std::pow(10.0, -1.0 + 3.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    const Chain chain = testing::random_chain(rng, n, t, 2.0 / mu);
    const VectorXd x = testing::gaussian(rng, n, 1.0 / mu);
    const double reference = oracle::smoothed_min_barrier(testing::to_affine_max(chain), x, mu);
    REQUIRE(std::abs(envelope(chain, x, mu).value - reference) <= 1e-6);
  }
}

TEST_CASE("holder constant of the smoothed function") {
  CHECK(holder_constant(1.0, 4.0, 0.5) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(holder_constant(1.0, 7.5, 1.0) == 7.5);
  CHECK(holder_constant(1.0, 7.5, 0.0) == 2.0);
  CHECK(holder_constant(0.5, 7.5, 1.0) == 3.75);
  CHECK_THROWS_AS(holder_constant(1.0, 1.0, 1.5), InputError);
  CHECK_THROWS_AS(holder_constant(0.0, 1.0, 0.5), InputError);
}

TEST_CASE("envelope works in long double") {
  ChainFunction<long double> chain(2, 1.0L, {{0, 1, 0.0L}, {1, 1, 0.0L}});
  Eigen::Matrix<long double, 2, 1> x(0.0L, 0.0L);
  const auto e = envelope(chain, x, 1.0L);
  CHECK(std::abs(double(e.value + 0.25L)) < 1e-18);
}
