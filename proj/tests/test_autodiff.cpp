#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "derivative_checks.hpp"
#include "perceptlab/autodiff.hpp"

using namespace perceptlab::autodiff;

namespace {

// library-independent oracle for e^x: Taylor series with term-size cutoff
double exp_series(double x) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= x / k;
    sum += term;
    if (std::fabs(term) < 1e-20) break;
  }
  return sum;
}

}  // namespace

TEST_CASE("recording elementary operations") {
  Tape tape;
  const Scalar a = tape.leaf(3.0);
  const Scalar b = tape.leaf(4.0);
  CHECK((a * b).value() == 12.0);
  CHECK(tanh(tape.leaf(0.0)).value() == 0.0);
  CHECK(exp(tape.leaf(1.0)).value() == doctest::Approx(exp_series(1.0)).epsilon(1e-12));
  CHECK(min(a, b).value() == 3.0);
  CHECK(max(a, b).value() == 4.0);
  CHECK(abs(tape.leaf(-2.5)).value() == 2.5);
  CHECK(pow(a, 2.0).value() == 9.0);
}

TEST_CASE("constants fold without a tape") {
  const Scalar c = Scalar(2.0) * Scalar(3.0) + Scalar(1.0);
  CHECK(c.is_constant());
  CHECK(c.value() == 7.0);
}

TEST_CASE("domain violations are rejected with the operation named") {
  Tape tape;
  const Scalar x = tape.leaf(1.0);
  const Scalar zero = tape.leaf(0.0);
  CHECK_THROWS_WITH_AS(x / zero, doctest::Contains("div"), std::domain_error);
  CHECK_THROWS_WITH_AS(ln(tape.leaf(-1.0)), doctest::Contains("ln"), std::domain_error);
  CHECK_THROWS_WITH_AS(ln(zero), doctest::Contains("ln"), std::domain_error);
  CHECK_THROWS_AS(Scalar(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(Scalar(1.0 / 0.0), std::domain_error);
}

TEST_CASE("mixing tapes is a hard error") {
  Tape t1, t2;
  const Scalar a = t1.leaf(1.0);
  const Scalar b = t2.leaf(2.0);
  CHECK_THROWS_AS(a + b, std::invalid_argument);
  const Scalar in[] = {b};
  CHECK_THROWS_AS(gradient(a, in), std::invalid_argument);
}

TEST_CASE("gradient basics") {
  Tape tape;
  SUBCASE("power rule") {
    const Scalar x = tape.leaf(3.0);
    const Scalar y = x * x;
    const Scalar in[] = {x};
    CHECK(gradient(y, in)[0] == doctest::Approx(6.0));
  }
  SUBCASE("product rule") {
    const Scalar x = tape.leaf(2.0);
    const Scalar y = tape.leaf(5.0);
    const Scalar in[] = {x, y};
    const auto g = gradient(x * y, in);
    CHECK(g[0] == doctest::Approx(5.0));
    CHECK(g[1] == doctest::Approx(2.0));
  }
  SUBCASE("tanh chain vs finite differences") {
    const Scalar x = tape.leaf(0.5);
    const Scalar y = tanh(x * 2.0);
    const Scalar in[] = {x};
    const double ad = gradient(y, in)[0];
    const double t = std::tanh(1.0);
    CHECK(ad == doctest::Approx(2.0 * (1.0 - t * t)).epsilon(1e-10));
    const double h = 1e-5;
    const double fd = (std::tanh(2.0 * (0.5 + h)) - std::tanh(2.0 * (0.5 - h))) / (2.0 * h);
    CHECK(ad == doctest::Approx(fd).epsilon(1e-4));
  }
  SUBCASE("unreachable inputs get zero") {
    const Scalar x = tape.leaf(1.0);
    const Scalar y = tape.leaf(2.0);
    const Scalar out = x * 3.0;
    const Scalar in[] = {x, y};
    const auto g = gradient(out, in);
    CHECK(g[0] == 3.0);
    CHECK(g[1] == 0.0);
  }
}

TEST_CASE("second derivatives through nested recording") {
  Tape tape;
  SUBCASE("cubic") {
    const Scalar x = tape.leaf(2.0);
    CHECK(derivative_of_derivative(pow(x, 3.0), x) == doctest::Approx(12.0));
  }
  SUBCASE("sine at the origin") {
    const Scalar x = tape.leaf(0.0);
    CHECK(derivative_of_derivative(sin(x), x) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("scaled exponential") {
    const Scalar x = tape.leaf(1.0);
    const double want = 0.25 * std::exp(-0.5);
    CHECK(derivative_of_derivative(exp(x * -0.5), x) == doctest::Approx(want).epsilon(1e-10));
    const double h = 1e-4;
    auto f = [](double v) { return std::exp(-0.5 * v); };
    const double fd = (f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h)) / (h * h);
    CHECK(derivative_of_derivative(exp(x * -0.5), x) == doctest::Approx(fd).epsilon(1e-3));
  }
}

TEST_CASE("derivative expression stays differentiable") {
  Tape tape;
  const Scalar x = tape.leaf(0.7);
  const Scalar y = sin(x) * exp(x);
  const Scalar dy = derivative(y, x);
  // d/dx (sin e^x): cos(x)e^x + sin(x)e^x
  const double want = std::exp(0.7) * (std::cos(0.7) + std::sin(0.7));
  CHECK(dy.value() == doctest::Approx(want).epsilon(1e-12));
  // third derivative exists too: differentiate the second-derivative expression
  const Scalar d2 = derivative(dy, x);
  const Scalar in[] = {x};
  const double d3 = gradient(d2, in)[0];
  const double want3 = std::exp(0.7) * (2.0 * std::cos(0.7) - 2.0 * std::sin(0.7) +
                                        2.0 * std::cos(0.7));
  // d3/dx3 = e^x (2cos - 2sin) + ... cross-check with finite differences instead
  (void)want3;
  const double h = 1e-4;
  auto f = [](double v) { return std::sin(v) * std::exp(v); };
  const double fd2 = (f(0.7 + h) - 2.0 * f(0.7) + f(0.7 - h)) / (h * h);
  CHECK(d2.value() == doctest::Approx(fd2).epsilon(1e-6));
  // wider step: the h^3 denominator amplifies rounding otherwise
  const double h3 = 1e-3;
  const double fd3 = (f(0.7 + 2 * h3) - 2 * f(0.7 + h3) + 2 * f(0.7 - h3) - f(0.7 - 2 * h3)) /
                     (2 * h3 * h3 * h3);
  CHECK(d3 == doctest::Approx(fd3).epsilon(1e-4));
}

TEST_CASE("gradient linearity") {
  Tape tape;
  const Scalar x = tape.leaf(1.3);
  const Scalar y = tape.leaf(-0.4);
  const Scalar f = sin(x) * y;
  const Scalar g = exp(y) + x * x;
  const Scalar in[] = {x, y};
  const auto gf = gradient(f, in);
  const auto gg = gradient(g, in);
  const auto gsum = gradient(f + g, in);
  for (int i = 0; i < 2; ++i)
    CHECK(gsum[static_cast<std::size_t>(i)] ==
          doctest::Approx(gf[static_cast<std::size_t>(i)] + gg[static_cast<std::size_t>(i)])
              .epsilon(1e-12));
}

TEST_CASE("randomized finite-difference sweep") {
  const auto first = derivative_checks::run_first_order_checks(7, 400);
  CHECK(first.failures == 0);
  CHECK(first.worst_rel < 1e-4);
  const auto second = derivative_checks::run_second_order_checks(11, 120);
  CHECK(second.failures == 0);
  CHECK(second.worst_rel < 1e-3);
}

TEST_CASE("rewind invalidates later nodes and keeps leaves") {
  Tape tape;
  const Scalar w = tape.leaf(2.0);
  const std::size_t mark = tape.mark();
  const Scalar y = w * w;
  CHECK(y.value() == 4.0);
  tape.rewind(mark);
  CHECK_THROWS_AS(y + 1.0, std::logic_error);
  tape.set_leaf(w.node(), 3.0);
  const Scalar y2 = tape.at(w.node()) * tape.at(w.node());
  CHECK(y2.value() == 9.0);
}

TEST_CASE("min max tie-breaking is deterministic") {
  Tape tape;
  const Scalar a = tape.leaf(1.0);
  const Scalar b = tape.leaf(1.0);
  const Scalar in[] = {a, b};
  const auto gmin = gradient(min(a, b), in);
  CHECK(gmin[0] == 1.0);  // first operand wins the tie
  CHECK(gmin[1] == 0.0);
  const auto gmax = gradient(max(a, b), in);
  CHECK(gmax[0] == 1.0);
  CHECK(gmax[1] == 0.0);
  // abs at zero differentiates as its left-derivative
  const Scalar z = tape.leaf(0.0);
  const Scalar zin[] = {z};
  CHECK(gradient(abs(z), zin)[0] == -1.0);
}
