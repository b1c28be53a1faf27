#include "perceptlab/fuzzy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace perceptlab::fuzzy {

using autodiff::Scalar;

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

std::string triple_text(double a, double b, double c) {
  std::ostringstream out;
  out << "(" << a << ", " << b << ", " << c << ")";
  return out.str();
}

// Piecewise-linear evaluation shared by the double and recorded paths. The
// branch order makes every kink differentiate as its left-derivative, and the
// explicit core branch keeps degenerate shoulders (a == b or b == c) normal.
template <typename T>
T eval_triangular(double a, double b, double c, double xv, const T& x) {
  if (a < xv && xv <= b) return (x - a) / (b - a);
  if (b < xv && xv <= c) return (c - x) / (c - b);
  if (xv == b) return T(1.0);
  return T(0.0);
}

template <typename T>
T eval_trapezoidal(double a, double b, double c, double d, double xv, const T& x) {
  if (a < xv && xv <= b) return (x - a) / (b - a);
  if (b < xv && xv <= c) return T(1.0);
  if (c < xv && xv <= d) return (d - x) / (d - c);
  if (xv == b) return T(1.0);
  return T(0.0);
}

inline double mf_exp(double v) { return std::exp(v); }
inline Scalar mf_exp(const Scalar& v) { return autodiff::exp(v); }

template <typename T>
T eval_gaussian(double center, double width, const T& x) {
  const T z = (x - center) / width;
  return mf_exp(z * z * -0.5);
}

}  // namespace

TriangularFuzzyNumber::TriangularFuzzyNumber(double a_, double b_, double c_)
    : a(a_), b(b_), c(c_) {
  if (!(a <= b && b <= c))
    fail("fuzzy triple " + triple_text(a, b, c) + " is not nondecreasing");
}

double TriangularFuzzyNumber::membership(double x) const {
  return eval_triangular<double>(a, b, c, x, x);
}

Granule::Granule(double mu_, double alpha_) : mu(mu_), alpha(alpha_) {
  if (!(mu >= 0.0 && mu <= 1.0)) fail("granule: mu outside [0, 1]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("granule: alpha outside [0, 1]");
}

MembershipFunction MembershipFunction::triangular(double a, double b, double c) {
  if (!(a <= b && b <= c))
    fail("triangular membership " + triple_text(a, b, c) + " is not nondecreasing");
  return MembershipFunction(Shape::kTriangular, a, b, c, 0.0);
}

MembershipFunction MembershipFunction::trapezoidal(double a, double b, double c, double d) {
  if (!(a <= b && b <= c && c <= d)) fail("trapezoidal membership is not nondecreasing");
  return MembershipFunction(Shape::kTrapezoidal, a, b, c, d);
}

MembershipFunction MembershipFunction::gaussian(double center, double width) {
  if (!(width > 0.0)) fail("gaussian membership needs width > 0");
  return MembershipFunction(Shape::kGaussian, center, width, 0.0, 0.0);
}

double MembershipFunction::operator()(double x) const {
  switch (shape_) {
    case Shape::kTriangular: return eval_triangular<double>(p_[0], p_[1], p_[2], x, x);
    case Shape::kTrapezoidal: return eval_trapezoidal<double>(p_[0], p_[1], p_[2], p_[3], x, x);
    case Shape::kGaussian: return eval_gaussian<double>(p_[0], p_[1], x);
  }
  return 0.0;
}

Scalar MembershipFunction::operator()(const Scalar& x) const {
  switch (shape_) {
    case Shape::kTriangular: return eval_triangular<Scalar>(p_[0], p_[1], p_[2], x.value(), x);
    case Shape::kTrapezoidal:
      return eval_trapezoidal<Scalar>(p_[0], p_[1], p_[2], p_[3], x.value(), x);
    case Shape::kGaussian: return eval_gaussian<Scalar>(p_[0], p_[1], x);
  }
  return Scalar(0.0);
}

std::string MembershipFunction::describe() const {
  std::ostringstream out;
  switch (shape_) {
    case Shape::kTriangular: out << "triangular " << p_[0] << " " << p_[1] << " " << p_[2]; break;
    case Shape::kTrapezoidal:
      out << "trapezoidal " << p_[0] << " " << p_[1] << " " << p_[2] << " " << p_[3];
      break;
    case Shape::kGaussian: out << "gaussian " << p_[0] << " " << p_[1]; break;
  }
  return out.str();
}

RuleSet::RuleSet(std::vector<Rule> rules_, TNorm tnorm_, SNorm snorm_)
    : rules(std::move(rules_)), tnorm(tnorm_), snorm(snorm_) {
  if (rules.empty()) fail("rule set needs at least one rule");
  const std::size_t n = rules.front().antecedents.size();
  if (n == 0) fail("rules need at least one antecedent");
  for (const Rule& r : rules)
    if (r.antecedents.size() != n) fail("rules disagree on input arity");
}

double membership(const MembershipFunction& f, double x) { return f(x); }

double hmf(const TriangularFuzzyNumber& n, const Granule& g) {
  const double lo = n.a + g.mu * (n.b - n.a);
  const double hi = n.c - g.mu * (n.c - n.b);
  return lo + g.alpha * (hi - lo);
}

Scalar hmf(const TriangularFuzzyNumber& n, const Scalar& mu, const Scalar& alpha) {
  const Scalar lo = n.a + mu * (n.b - n.a);
  const Scalar hi = n.c - mu * (n.c - n.b);
  return lo + alpha * (hi - lo);
}

Interval alpha_cut(const TriangularFuzzyNumber& n, double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) fail("alpha_cut: mu outside [0, 1]");
  return Interval{n.a + mu * (n.b - n.a), n.c - mu * (n.c - n.b)};
}

namespace {

inline double mf_min(double a, double b) { return a <= b ? a : b; }
inline double mf_max(double a, double b) { return a >= b ? a : b; }
inline Scalar mf_min(const Scalar& a, const Scalar& b) { return autodiff::min(a, b); }
inline Scalar mf_max(const Scalar& a, const Scalar& b) { return autodiff::max(a, b); }

template <typename S>
S restriction_impl(const RuleSet& rs, std::span<const double> inputs, const S& output) {
  if (inputs.size() != rs.arity())
    fail("restriction: got " + std::to_string(inputs.size()) + " inputs for arity " +
         std::to_string(rs.arity()));
  bool first = true;
  S acc(0.0);
  for (const Rule& rule : rs.rules) {
    double w = 1.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const double m = rule.antecedents[i](inputs[i]);
      w = rs.tnorm == TNorm::kMin ? mf_min(w, m) : w * m;
    }
    const S cons = rule.consequent(output);
    const S fired = rs.tnorm == TNorm::kMin ? mf_min(S(w), cons) : cons * w;
    if (first) {
      acc = fired;
      first = false;
    } else {
      acc = rs.snorm == SNorm::kMax ? mf_max(acc, fired) : acc + fired;
    }
  }
  if (rs.snorm == SNorm::kBoundedSum) acc = mf_min(acc, S(1.0));
  return acc;
}

}  // namespace

double restriction(const RuleSet& rs, std::span<const double> inputs, double output) {
  return restriction_impl<double>(rs, inputs, output);
}

Scalar restriction(const RuleSet& rs, std::span<const double> inputs, const Scalar& output) {
  return restriction_impl<Scalar>(rs, inputs, output);
}

}  // namespace perceptlab::fuzzy
