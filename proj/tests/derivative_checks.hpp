// Randomized finite-difference cross-checks of the autodiff engine, shared by
// the unit tests and the acceptance suite. Every elementary operation gets
// value-level twins in plain double arithmetic; derivatives from the tape are
// compared against central differences of the twins.

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "perceptlab/autodiff.hpp"
#include "perceptlab/rng.hpp"

namespace derivative_checks {

using perceptlab::Rng;
using perceptlab::autodiff::Scalar;
using perceptlab::autodiff::Tape;

struct Stats {
  int trials = 0;
  int failures = 0;
  double worst_rel = 0.0;
  std::string worst_case;
};

inline double rel_err(double got, double want) {
  const double scale = std::max({std::fabs(got), std::fabs(want), 1e-6});
  return std::fabs(got - want) / scale;
}

struct UnaryCase {
  const char* name;
  std::function<double(double)> twin;
  std::function<Scalar(const Scalar&)> op;
  std::function<double(Rng&)> draw;  // input generator with domain guards
};

struct BinaryCase {
  const char* name;
  std::function<double(double, double)> twin;
  std::function<Scalar(const Scalar&, const Scalar&)> op;
  std::function<std::pair<double, double>(Rng&)> draw;
};

inline const std::vector<UnaryCase>& unary_cases() {
  using namespace perceptlab::autodiff;
  static const std::vector<UnaryCase> cases = {
      {"exp", [](double x) { return std::exp(x); },
       [](const Scalar& x) { return exp(x); },
       [](Rng& r) { return r.uniform(-3.0, 3.0); }},
      {"ln", [](double x) { return std::log(x); },
       [](const Scalar& x) { return ln(x); },
       [](Rng& r) { return r.uniform(0.05, 3.0); }},
      {"tanh", [](double x) { return std::tanh(x); },
       [](const Scalar& x) { return tanh(x); },
       [](Rng& r) { return r.uniform(-3.0, 3.0); }},
      {"sin", [](double x) { return std::sin(x); },
       [](const Scalar& x) { return sin(x); },
       [](Rng& r) { return r.uniform(-3.0, 3.0); }},
      {"abs", [](double x) { return std::fabs(x); },
       [](const Scalar& x) { return abs(x); },
       // keep clear of the kink so the FD stencil stays one-sided
       [](Rng& r) {
         const double v = r.uniform(0.05, 3.0);
         return r.uniform() < 0.5 ? v : -v;
       }},
  };
  return cases;
}

inline const std::vector<BinaryCase>& binary_cases() {
  using namespace perceptlab::autodiff;
  auto both = [](Rng& r) { return std::pair{r.uniform(-3.0, 3.0), r.uniform(-3.0, 3.0)}; };
  static const std::vector<BinaryCase> cases = {
      {"add", [](double a, double b) { return a + b; },
       [](const Scalar& a, const Scalar& b) { return a + b; }, both},
      {"sub", [](double a, double b) { return a - b; },
       [](const Scalar& a, const Scalar& b) { return a - b; }, both},
      {"mul", [](double a, double b) { return a * b; },
       [](const Scalar& a, const Scalar& b) { return a * b; }, both},
      {"div", [](double a, double b) { return a / b; },
       [](const Scalar& a, const Scalar& b) { return a / b; },
       [](Rng& r) {
         const double b = r.uniform(0.5, 3.0);
         return std::pair{r.uniform(-3.0, 3.0), r.uniform() < 0.5 ? b : -b};
       }},
      {"pow", [](double a, double b) { return std::pow(a, b); },
       [](const Scalar& a, const Scalar& b) { return pow(a, b); },
       [](Rng& r) { return std::pair{r.uniform(0.2, 3.0), r.uniform(-2.0, 2.0)}; }},
      {"min", [](double a, double b) { return a <= b ? a : b; },
       [](const Scalar& a, const Scalar& b) { return min(a, b); },
       // stay away from ties: the FD stencil must not straddle the switch
       [](Rng& r) {
         const double a = r.uniform(-3.0, 3.0);
         double b = r.uniform(-3.0, 3.0);
         if (std::fabs(a - b) < 1e-3) b += b > a ? 1e-3 : -1e-3;
         return std::pair{a, b};
       }},
      {"max", [](double a, double b) { return a >= b ? a : b; },
       [](const Scalar& a, const Scalar& b) { return max(a, b); },
       [](Rng& r) {
         const double a = r.uniform(-3.0, 3.0);
         double b = r.uniform(-3.0, 3.0);
         if (std::fabs(a - b) < 1e-3) b += b > a ? 1e-3 : -1e-3;
         return std::pair{a, b};
       }},
  };
  return cases;
}

/// First derivatives of every elementary op vs central differences,
/// h = 1e-5, inputs in [-3, 3], `trials` checks in total.
inline Stats run_first_order_checks(std::uint64_t seed, int trials, double tolerance = 1e-4) {
  Rng rng(seed);
  Stats stats;
  const double h = 1e-5;
  const auto& unary = unary_cases();
  const auto& binary = binary_cases();
  const std::size_t case_count = unary.size() + binary.size();
  for (int k = 0; k < trials; ++k) {
    const std::size_t pick = static_cast<std::size_t>(k) % case_count;
    ++stats.trials;
    double rel = 0.0;
    std::string label;
    if (pick < unary.size()) {
      const auto& c = unary[pick];
      const double x = c.draw(rng);
      Tape tape;
      const Scalar xs = tape.leaf(x);
      const Scalar out = c.op(xs);
      const Scalar in[] = {xs};
      const double ad = perceptlab::autodiff::gradient(out, in)[0];
      const double fd = (c.twin(x + h) - c.twin(x - h)) / (2.0 * h);
      rel = rel_err(ad, fd);
      label = c.name;
    } else {
      const auto& c = binary[pick - unary.size()];
      const auto [a, b] = c.draw(rng);
      Tape tape;
      const Scalar as = tape.leaf(a);
      const Scalar bs = tape.leaf(b);
      const Scalar out = c.op(as, bs);
      const Scalar in[] = {as, bs};
      const auto grads = perceptlab::autodiff::gradient(out, in);
      const double fda = (c.twin(a + h, b) - c.twin(a - h, b)) / (2.0 * h);
      const double fdb = (c.twin(a, b + h) - c.twin(a, b - h)) / (2.0 * h);
      rel = std::max(rel_err(grads[0], fda), rel_err(grads[1], fdb));
      label = c.name;
    }
    if (rel > stats.worst_rel) {
      stats.worst_rel = rel;
      stats.worst_case = label;
    }
    if (rel >= tolerance) ++stats.failures;
  }
  return stats;
}

/// Second derivatives of smooth compositions vs second-order central
/// differences, h = 1e-4.
inline Stats run_second_order_checks(std::uint64_t seed, int trials, double tolerance = 1e-3) {
  using namespace perceptlab::autodiff;
  struct Case {
    const char* name;
    std::function<double(double)> twin;
    std::function<Scalar(const Scalar&)> op;
    std::function<double(Rng&)> draw;
  };
  static const std::vector<Case> cases = {
      {"cube", [](double x) { return x * x * x; },
       [](const Scalar& x) { return pow(x, 3.0); },
       [](Rng& r) { return r.uniform(-3.0, 3.0); }},
      {"sin", [](double x) { return std::sin(x); },
       [](const Scalar& x) { return sin(x); },
       [](Rng& r) { return r.uniform(-3.0, 3.0); }},
      {"exp_scaled", [](double x) { return std::exp(-0.5 * x); },
       [](const Scalar& x) { return exp(x * -0.5); },
       [](Rng& r) { return r.uniform(-3.0, 3.0); }},
      {"tanh_comp", [](double x) { return std::tanh(2.0 * x); },
       [](const Scalar& x) { return tanh(x * 2.0); },
       [](Rng& r) { return r.uniform(-2.0, 2.0); }},
      {"ln_sq", [](double x) { return std::log(x) * std::log(x); },
       [](const Scalar& x) { return ln(x) * ln(x); },
       [](Rng& r) { return r.uniform(0.3, 3.0); }},
      {"ratio", [](double x) { return x / (1.0 + x * x); },
       [](const Scalar& x) { return x / (1.0 + x * x); },
       [](Rng& r) { return r.uniform(-3.0, 3.0); }},
  };
  Rng rng(seed);
  Stats stats;
  const double h = 1e-4;
  for (int k = 0; k < trials; ++k) {
    const auto& c = cases[static_cast<std::size_t>(k) % cases.size()];
    const double x = c.draw(rng);
    Tape tape;
    const Scalar xs = tape.leaf(x);
    const Scalar out = c.op(xs);
    const double ad = derivative_of_derivative(out, xs);
    const double fd = (c.twin(x + h) - 2.0 * c.twin(x) + c.twin(x - h)) / (h * h);
    const double rel = rel_err(ad, fd);
    ++stats.trials;
    if (rel > stats.worst_rel) {
      stats.worst_rel = rel;
      stats.worst_case = c.name;
    }
    if (rel >= tolerance) ++stats.failures;
  }
  return stats;
}

}  // namespace derivative_checks
