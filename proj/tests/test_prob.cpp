#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "perceptlab/prob.hpp"
#include "perceptlab/rng.hpp"

using namespace perceptlab;
using namespace perceptlab::prob;

TEST_CASE("pdf closed-form spots") {
  CHECK(pdf(Normal(0, 1), 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * 3.14159265358979323846))
                                      .epsilon(1e-12));
  CHECK(pdf(Normal(0, 1), 1.0) == pdf(Normal(0, 1), -1.0));  // symmetry
  CHECK(pdf(Normal(5, 4), 5.0) ==
        doctest::Approx(1.0 / (2.0 * std::sqrt(2.0 * 3.14159265358979323846))).epsilon(1e-12));
  CHECK_THROWS_AS(Normal(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(Normal(0, -1), std::invalid_argument);
}

TEST_CASE("pushforward is the affine-normal identity") {
  const auto p = pushforward(Normal(0.2, 0.01), 1.0, 2.0);
  REQUIRE(!p.degenerate);
  CHECK(p.distribution.mean == doctest::Approx(1.4).epsilon(1e-15));
  CHECK(p.distribution.variance == doctest::Approx(0.04).epsilon(1e-15));

  const auto id = pushforward(Normal(3, 2), 0.0, 1.0);
  CHECK(id.distribution.mean == 3.0);
  CHECK(id.distribution.variance == 2.0);

  // residual shape: offset = xddot + omega^2 x, slope = 2 omega xdot, with
  // omega = 1, xdot = 0.5 and offset 0.3 this lands on N(0.5, 0.01)
  const auto g = pushforward(Normal(0.2, 0.01), 0.3, 2.0 * 1.0 * 0.5);
  CHECK(g.distribution.mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.distribution.variance == doctest::Approx(0.01).epsilon(1e-15));

  const auto point = pushforward(Normal(0.2, 0.01), 0.7, 0.0);
  CHECK(point.degenerate);
  CHECK(point.point == 0.7);
  CHECK(normalized_likelihood(point, 0.7) == 1.0);
  CHECK(normalized_likelihood(point, 0.0) == 0.0);
}

TEST_CASE("pushforward agrees with Monte Carlo") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const double mean = rng.uniform(-2, 2);
    const double var = rng.uniform(0.1, 2.0);
    const double offset = rng.uniform(-3, 3);
    double slope = rng.uniform(-2, 2);
    if (std::fabs(slope) < 0.1) slope = 0.5;
    const auto p = pushforward(Normal(mean, var), offset, slope);

    const std::size_t n = 20000;
    const auto draws = sample(Normal(mean, var), 2000 + trial, n);
    double acc = 0, acc2 = 0;
    for (double d : draws) {
      const double y = offset + slope * d;
      acc += y;
      acc2 += y * y;
    }
    const double mc_mean = acc / n;
    const double mc_var = (acc2 - n * mc_mean * mc_mean) / (n - 1);
    const double se_mean = std::sqrt(p.distribution.variance / n);
    const double se_var = p.distribution.variance * std::sqrt(2.0 / (n - 1));
    CHECK(std::fabs(mc_mean - p.distribution.mean) < 4 * se_mean);
    CHECK(std::fabs(mc_var - p.distribution.variance) < 4 * se_var);
  }
}

TEST_CASE("normalized likelihood") {
  CHECK(normalized_likelihood(Normal(3.7, 0.6), 3.7) == 1.0);
  CHECK(normalized_likelihood(Normal(0, 1), 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(normalized_likelihood(Normal(0, 0.25), 1.0) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

  // in (0, 1], and invariant under simultaneous affine rescaling
  Rng rng(9);
  for (int k = 0; k < 300; ++k) {
    const double m = rng.uniform(-3, 3), v = rng.uniform(0.05, 4.0), x = rng.uniform(-6, 6);
    const double lik = normalized_likelihood(Normal(m, v), x);
    CHECK(lik > 0.0);
    CHECK(lik <= 1.0);
    const double a = rng.uniform(0.2, 3.0), b = rng.uniform(-2, 2);
    const double rescaled = normalized_likelihood(Normal(a * m + b, a * a * v), a * x + b);
    CHECK(rescaled == doctest::Approx(lik).epsilon(1e-9));
  }
}

TEST_CASE("sampling is seeded and converges") {
  const auto a = sample(Normal(0, 1), 42, 1000);
  const auto b = sample(Normal(0, 1), 42, 1000);
  CHECK(a == b);  // determinism, bitwise
  const auto c = sample(Normal(0, 1), 43, 1000);
  CHECK(a != c);
  CHECK_THROWS_AS(sample(Normal(0, 1), 0, 0), std::invalid_argument);

  const std::size_t n = 1000000;
  const auto big = sample(Normal(0, 1), 7, n);
  double acc = 0;
  for (double v : big) acc += v;
  CHECK(std::fabs(acc / n) < 0.005);  // 3 sigma CLT bound at sigma/sqrt(n) ~ 0.001

  const auto wide = sample(Normal(3, 4), 11, n);
  double m = 0;
  for (double v : wide) m += v;
  m /= n;
  double var = 0;
  for (double v : wide) var += (v - m) * (v - m);
  var /= (n - 1);
  CHECK(var > 3.97);
  CHECK(var < 4.03);
}
