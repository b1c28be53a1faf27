// Possibility-distribution arithmetic: membership functions, triangular fuzzy
// numbers with horizontal membership function (HMF) coordinates, alpha-cuts,
// and t-norm/s-norm rule sets evaluating a joint restriction in [0, 1].
//
// Membership evaluation exists in two forms: plain doubles for oracles and
// tests, and a recorded form over autodiff scalars for loss terms. The
// recorded form picks the active piecewise-linear segment by value so kinks
// differentiate as their left-derivative.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "perceptlab/autodiff.hpp"

namespace perceptlab::fuzzy {

/// Ordered triple (a, b, c), a <= b <= c; core at b, support (a, c).
struct TriangularFuzzyNumber {
  TriangularFuzzyNumber(double a, double b, double c);

  double membership(double x) const;

  double a, b, c;
};

/// One HMF coordinate: membership level mu and RDM position alpha, both in [0, 1].
struct Granule {
  Granule(double mu, double alpha);

  double mu, alpha;
};

class MembershipFunction {
 public:
  static MembershipFunction triangular(double a, double b, double c);
  static MembershipFunction trapezoidal(double a, double b, double c, double d);
  static MembershipFunction gaussian(double center, double width);

  double operator()(double x) const;
  autodiff::Scalar operator()(const autodiff::Scalar& x) const;

  std::string describe() const;

 private:
  enum class Shape { kTriangular, kTrapezoidal, kGaussian };
  MembershipFunction(Shape s, double p0, double p1, double p2, double p3)
      : shape_(s), p_{p0, p1, p2, p3} {}

  Shape shape_;
  double p_[4];
};

enum class TNorm { kMin, kProduct };
enum class SNorm { kMax, kBoundedSum };

struct Rule {
  std::vector<MembershipFunction> antecedents;  // one per input variable
  MembershipFunction consequent;
};

struct RuleSet {
  RuleSet(std::vector<Rule> rules, TNorm tnorm, SNorm snorm);

  std::size_t arity() const { return rules.front().antecedents.size(); }

  std::vector<Rule> rules;
  TNorm tnorm;
  SNorm snorm;
};

double membership(const MembershipFunction& f, double x);

/// Crisp value of the fuzzy number at HMF coordinates:
/// lo(mu) + alpha * (hi(mu) - lo(mu)) over the mu-level cut [lo, hi].
double hmf(const TriangularFuzzyNumber& n, const Granule& g);
autodiff::Scalar hmf(const TriangularFuzzyNumber& n, const autodiff::Scalar& mu,
                     const autodiff::Scalar& alpha);

struct Interval {
  double lo, hi;
};

/// mu-level cut [a + mu(b-a), c - mu(c-b)]; mu outside [0,1] is an error.
Interval alpha_cut(const TriangularFuzzyNumber& n, double mu);

/// Joint restriction of the rule set: s-norm over rules of the t-norm of all
/// memberships. Bounded sum clamps at 1.
double restriction(const RuleSet& rs, std::span<const double> inputs, double output);

/// Same restriction with a differentiable output variable.
autodiff::Scalar restriction(const RuleSet& rs, std::span<const double> inputs,
                             const autodiff::Scalar& output);

}  // namespace perceptlab::fuzzy
