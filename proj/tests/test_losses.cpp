#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "perceptlab/losses.hpp"
#include "perceptlab/rng.hpp"

using namespace perceptlab;
using namespace perceptlab::losses;
using autodiff::Scalar;
using autodiff::Tape;

namespace {

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

}  // namespace

TEST_CASE("data loss") {
  Tape tape;
  SUBCASE("zero at a perfect fit") {
    const Scalar preds[] = {tape.leaf(1.0), tape.leaf(2.0)};
    const double obs[] = {1.0, 2.0};
    CHECK(data_loss(preds, obs).value() == 0.0);
  }
  SUBCASE("mean of squares") {
    const Scalar preds[] = {tape.leaf(1.0), tape.leaf(2.0)};
    const double obs[] = {0.0, 0.0};
    CHECK(data_loss(preds, obs).value() == doctest::Approx(2.5));
  }
  SUBCASE("single pair") {
    const Scalar preds[] = {tape.leaf(3.0)};
    const double obs[] = {5.0};
    CHECK(data_loss(preds, obs).value() == doctest::Approx(4.0));
  }
  SUBCASE("empty batch is an error") {
    CHECK_THROWS_AS(data_loss({}, {}), std::invalid_argument);
    const Scalar preds[] = {tape.leaf(1.0)};
    const double obs[] = {1.0, 2.0};
    CHECK_THROWS_AS(data_loss(preds, obs), std::invalid_argument);
  }
}

TEST_CASE("initial-condition loss") {
  Tape tape;
  CHECK(ic_loss(tape.leaf(5.0), 5.0).value() == 0.0);
  CHECK(ic_loss(tape.leaf(0.0), 5.0).value() == 25.0);
  const Scalar x0 = tape.leaf(6.0);
  const Scalar l = ic_loss(x0, 5.0);
  const Scalar in[] = {x0};
  CHECK(autodiff::gradient(l, in)[0] == doctest::Approx(2.0));  // d(e^2)/de at e=1
}

TEST_CASE("residual loss against analytic stubs") {
  Tape tape;
  const auto colloc = grid(0.0, 3.0, 31);
  SUBCASE("the exact solution annihilates the residual") {
    const Forward exact(tape, [](const Scalar& t) { return 5.0 * exp(t * -0.5); });
    const Rhs1 f = [](const Scalar&, const Scalar& x) { return x * -0.5; };
    CHECK(residual_loss(exact, f, colloc).value() < 1e-20);
  }
  SUBCASE("a constant stub leaves the full right-hand side") {
    const Forward constant(tape, [](const Scalar&) { return Scalar(5.0); });
    const Rhs1 f = [](const Scalar&, const Scalar& x) { return x * -0.5; };
    // residual = 0 - (-2.5) at every point
    CHECK(residual_loss(constant, f, colloc).value() == doctest::Approx(6.25));
  }
  SUBCASE("second-order oscillator stub") {
    const double zeta = 0.1, omega = 2.0, x0 = 2.0;
    const double wd = omega * std::sqrt(1.0 - zeta * zeta);
    const double b = zeta * omega * x0 / wd;
    const Forward exact(tape, [=](const Scalar& t) {
      return exp(t * (-zeta * omega)) * (x0 * sin(t * wd + 1.5707963267948966) + b * sin(t * wd));
    });
    const Residual2 g = [=](const Scalar&, const Scalar& x, const Scalar& xd, const Scalar& xdd) {
      return xdd + (2.0 * zeta * omega) * xd + (omega * omega) * x;
    };
    CHECK(granular_residual_loss(exact, g, colloc).value() < 1e-12);
  }
  SUBCASE("empty collocation is an error") {
    const Forward constant(tape, [](const Scalar&) { return Scalar(1.0); });
    CHECK_THROWS_AS(residual_loss(constant, [](const Scalar&, const Scalar& x) { return x; }, {}),
                    std::invalid_argument);
  }
}

TEST_CASE("possibility factor") {
  Tape tape;
  CHECK(possibility_factor(Scalar(1.0), 10.0).value() == 1.0);
  CHECK(possibility_factor(Scalar(1.0), 2.5).value() == 1.0);
  CHECK(possibility_factor(Scalar(0.0), 10.0).value() == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(possibility_factor(Scalar(0.5), 4.0).value() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(possibility_factor(Scalar(0.5), 1.0), std::invalid_argument);
  // differentiable in mu
  const Scalar mu = tape.leaf(0.3);
  const Scalar f = possibility_factor(mu, 10.0);
  const Scalar in[] = {mu};
  const double want = -std::log(10.0) * std::pow(10.0, 0.7);
  CHECK(autodiff::gradient(f, in)[0] == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("granular residual at pinned coordinates") {
  const fuzzy::TriangularFuzzyNumber lambda(-0.6, -0.5, -0.4);
  const auto colloc = grid(0.0, 3.0, 31);
  SUBCASE("mu = 1 reduces to the modal residual") {
    Tape tape;
    const Forward net(tape, [](const Scalar& t) { return tanh(t) * 2.0 + 1.0; });
    const Scalar lg = fuzzy::hmf(lambda, Scalar(1.0), Scalar(0.3));
    const Residual1 granular = [&](const Scalar&, const Scalar& x, const Scalar& xd) {
      return xd - lg * x;
    };
    const Residual1 modal = [](const Scalar&, const Scalar& x, const Scalar& xd) {
      return xd - Scalar(-0.5) * x;
    };
    const double a = granular_residual_loss(net, granular, colloc).value();
    const double b = granular_residual_loss(net, modal, colloc).value();
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
  SUBCASE("mu = 0, alpha = 1 picks the upper support end") {
    Tape tape;
    const Scalar lg = fuzzy::hmf(lambda, Scalar(0.0), Scalar(1.0));
    CHECK(lg.value() == doctest::Approx(-0.4).epsilon(1e-15));
    const Forward exact(tape, [](const Scalar& t) { return 5.0 * exp(t * -0.4); });
    const Residual1 granular = [&](const Scalar&, const Scalar& x, const Scalar& xd) {
      return xd - lg * x;
    };
    CHECK(granular_residual_loss(exact, granular, colloc).value() < 1e-12);
  }
  SUBCASE("gradients flow to mu and alpha") {
    Tape tape;
    auto mu = network::ConstrainedParam::bounded(tape, 0.0, 1.0, 0.2);
    auto alpha = network::ConstrainedParam::bounded(tape, 0.0, 1.0, -0.3);
    const std::size_t mark = tape.mark();
    const Forward stub(tape, [](const Scalar& t) { return 4.0 * exp(t * -0.45) + 0.3; });
    auto loss_value = [&] {
      tape.rewind(mark);
      const Scalar lg = fuzzy::hmf(lambda, mu.value(), alpha.value());
      const Residual1 granular = [&](const Scalar&, const Scalar& x, const Scalar& xd) {
        return xd - lg * x;
      };
      return granular_residual_loss(stub, granular, colloc);
    };
    const Scalar loss = loss_value();
    const Scalar params[] = {mu.raw(), alpha.raw()};
    const auto g = autodiff::gradient(loss, params);
    CHECK(g[0] != 0.0);
    CHECK(g[1] != 0.0);
    // finite differences on the raw parameters
    const double h = 1e-6;
    for (int which = 0; which < 2; ++which) {
      const auto& p = which == 0 ? mu : alpha;
      const double r0 = p.raw_value();
      tape.set_leaf(p.raw().node(), r0 + h);
      const double up = loss_value().value();
      tape.set_leaf(p.raw().node(), r0 - h);
      const double dn = loss_value().value();
      tape.set_leaf(p.raw().node(), r0);
      CHECK(g[static_cast<std::size_t>(which)] ==
            doctest::Approx((up - dn) / (2 * h)).epsilon(1e-4));
    }
  }
}

TEST_CASE("sureness pieces") {
  CHECK(sureness(Scalar(1.0), Scalar(1.0)).value() == 1.0);
  CHECK(sureness(Scalar(0.0), Scalar(0.77)).value() == 0.0);
  CHECK(sureness(Scalar(0.8), Scalar(0.6065)).value() == doctest::Approx(0.4852));
  CHECK(sureness_loss(Scalar(1.0)).value() == 0.0);
  CHECK(sureness_loss(Scalar(0.0)).value() == 1.0);
  CHECK(sureness_loss(Scalar(0.5)).value() == 0.25);
}

TEST_CASE("zero-residual likelihood") {
  const prob::Normal base(0.2, 0.01);
  Tape tape;
  SUBCASE("matches the pushforward evaluated at zero") {
    const Scalar offset = tape.leaf(0.3);
    const Scalar slope = tape.leaf(1.0);
    const double got = zero_residual_likelihood(offset, slope, base).value();
    const auto pushed = prob::pushforward(base, 0.3, 1.0);
    CHECK(got == doctest::Approx(prob::normalized_likelihood(pushed, 0.0)).epsilon(1e-12));
  }
  SUBCASE("point mass: 1 iff the offset is zero") {
    CHECK(zero_residual_likelihood(tape.leaf(0.0), Scalar(0.0), base).value() == 1.0);
    CHECK(zero_residual_likelihood(tape.leaf(0.4), Scalar(0.0), base).value() == 0.0);
  }
  SUBCASE("deep tails underflow to the constant zero instead of erroring") {
    const Scalar lik = zero_residual_likelihood(tape.leaf(1e8), tape.leaf(1e-3), base);
    CHECK(lik.value() == 0.0);
  }
  SUBCASE("gradient pushes the modal residual toward zero") {
    const Scalar offset = tape.leaf(0.3);
    const Scalar slope = tape.leaf(1.0);
    const Scalar lik = zero_residual_likelihood(offset, slope, base);
    const Scalar loss = sureness_loss(sureness(Scalar(0.9), lik));
    const Scalar in[] = {offset};
    // moving the offset toward -slope*mean (= residual zero) must reduce the loss
    const double g = autodiff::gradient(loss, in)[0];
    CHECK(g > 0.0);
  }
  SUBCASE("with a high likelihood and small residual the loss drives mu upward") {
    auto mu = network::ConstrainedParam::bounded(tape, 0.0, 1.0, 0.2);
    const std::size_t mark = tape.mark();
    auto loss_value = [&] {
      tape.rewind(mark);
      // pushforward mean offset + slope*0.2 sits at 1e-3: high likelihood
      const Scalar offset = tape.leaf(-base.mean + 1e-3);
      const Scalar slope = tape.leaf(1.0);
      const Scalar lik = zero_residual_likelihood(offset, slope, base);
      return sureness_loss(sureness(mu.value(), lik));
    };
    const Scalar loss = loss_value();
    const Scalar in[] = {mu.raw()};
    const double g = autodiff::gradient(loss, in)[0];
    CHECK(g < 0.0);  // descent raises raw, hence mu
    const double h = 1e-6;
    const double r0 = mu.raw_value();
    tape.set_leaf(mu.raw().node(), r0 + h);
    const double up = loss_value().value();
    tape.set_leaf(mu.raw().node(), r0 - h);
    const double dn = loss_value().value();
    tape.set_leaf(mu.raw().node(), r0);
    CHECK(g == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("rule losses") {
  const auto near = fuzzy::MembershipFunction::triangular(9.0, 10.0, 11.0);
  const auto approx2 = fuzzy::MembershipFunction::triangular(1.5, 2.0, 2.5);
  const fuzzy::RuleSet rs({fuzzy::Rule{{near}, approx2}}, fuzzy::TNorm::kMin,
                          fuzzy::SNorm::kMax);
  Tape tape;
  SUBCASE("zero at the cores, M off the supports") {
    const double at_core[] = {10.0};
    CHECK(rule_loss(rs, at_core, tape.leaf(2.0), 5.0).value() == 0.0);
    const double off[] = {0.0};
    CHECK(rule_loss(rs, off, tape.leaf(2.0), 10.0).value() == 10.0);
    CHECK_THROWS_AS(rule_loss(rs, at_core, tape.leaf(2.0), 0.5), std::invalid_argument);
  }
  SUBCASE("bounded by [0, M] for randomized inputs") {
    Rng rng(17);
    for (int k = 0; k < 500; ++k) {
      const double in[] = {rng.uniform(5.0, 15.0)};
      const Scalar out = tape.leaf(rng.uniform(-1.0, 5.0));
      const double m = rng.uniform(1.0, 20.0);
      const double v = rule_loss(rs, in, out, m).value();
      CHECK(v >= 0.0);
      CHECK(v <= m);
    }
  }
  SUBCASE("derivative rules see the slope, not the value") {
    const Forward line(tape, [](const Scalar& t) { return t * 2.0; });  // dx/dt = 2
    // with t at the antecedent core and the slope at the consequent core, no penalty
    const std::vector<double> at_core = {10.0};
    CHECK(derivative_rule_loss(line, rs, at_core, 5.0).value() == 0.0);
    // off the cores the restriction is capped by the antecedent membership
    const auto colloc = grid(9.5, 10.5, 11);
    double acc = 0;
    for (double t : colloc) {
      const double in[] = {t};
      const double r = fuzzy::restriction(rs, in, 2.0);
      acc += 5.0 * (1 - r) * (1 - r);
    }
    CHECK(derivative_rule_loss(line, rs, colloc, 5.0).value() ==
          doctest::Approx(acc / colloc.size()).epsilon(1e-12));
    const Forward flat(tape, [](const Scalar&) { return Scalar(1.0); });  // dx/dt = 0
    // slope 0 is outside the consequent support wherever the antecedent fires
    const double at10 = rule_loss(rs, at_core, tape.leaf(0.0) * 1.0, 5.0).value();
    CHECK(at10 == 5.0);
    CHECK(derivative_rule_loss(flat, rs, colloc, 5.0).value() > 1.0);
  }
  SUBCASE("state rules match a per-point hand evaluation") {
    const auto colloc = grid(9.0, 11.0, 5);
    const Forward line(tape, [](const Scalar& t) { return t * 0.21; });
    double acc = 0;
    for (double t : colloc) {
      const double in[] = {t};
      const double r = fuzzy::restriction(rs, in, 0.21 * t);
      acc += 5.0 * (1 - r) * (1 - r);
    }
    CHECK(state_rule_loss(line, rs, colloc, 5.0).value() ==
          doctest::Approx(acc / colloc.size()).epsilon(1e-12));
  }
}

TEST_CASE("composite loss") {
  Tape tape;
  const Scalar w = tape.leaf(2.0);
  CompositeLoss loss;
  loss.add("a", 1.0, [&] { return tape.at(w.node()) * tape.at(w.node()); });
  loss.add("b", 0.5, [&] { return tape.at(w.node()) + 1.0; });
  loss.add("zero", 0.0, [&] { return Scalar(123.0); });
  const auto eval = loss.evaluate();
  CHECK(eval.term_values.size() == 3);
  CHECK(eval.term_values[0] == 4.0);
  CHECK(eval.term_values[1] == 1.5);
  CHECK(eval.term_values[2] == 0.0);  // zero-weight terms drop out of the total
  CHECK(eval.total.value() == doctest::Approx(5.5).epsilon(1e-12));
  CHECK(loss.term_names() == std::vector<std::string>{"a", "b", "zero"});
  CHECK_THROWS_AS(loss.add("bad", -1.0, [] { return Scalar(0.0); }), std::invalid_argument);
}

TEST_CASE("preset names round-trip") {
  for (Preset p : {Preset::kSingular, Preset::kPossibility, Preset::kProbability,
                   Preset::kSureness, Preset::kFinn, Preset::kFinnDerivative}) {
    CHECK(preset_from_name(preset_name(p)) == p);
  }
  CHECK(!preset_from_name("bogus").has_value());
}
