#include "perceptlab/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace perceptlab::losses {

using autodiff::derivative;

CompositeLoss& CompositeLoss::add(std::string name, double weight,
                                  std::function<Scalar()> producer) {
  if (weight < 0.0) throw std::invalid_argument("loss term '" + name + "': negative weight");
  terms_.push_back(LossTerm{std::move(name), weight, std::move(producer)});
  return *this;
}

CompositeLoss::Evaluation CompositeLoss::evaluate() const {
  if (terms_.empty()) throw std::logic_error("composite loss has no terms");
  Evaluation out{Scalar(0.0), {}};
  out.term_values.reserve(terms_.size());
  bool first = true;
  for (const LossTerm& term : terms_) {
    Scalar weighted(0.0);
    try {
      weighted = term.producer() * term.weight;
    } catch (const std::domain_error& e) {
      throw std::domain_error("loss term '" + term.name + "': " + e.what());
    }
    out.term_values.push_back(weighted.value());
    out.total = first ? weighted : out.total + weighted;
    first = false;
  }
  return out;
}

std::vector<std::string> CompositeLoss::term_names() const {
  std::vector<std::string> names;
  names.reserve(terms_.size());
  for (const LossTerm& t : terms_) names.push_back(t.name);
  return names;
}

Scalar data_loss(std::span<const Scalar> predictions, std::span<const double> observations) {
  if (predictions.empty()) throw std::invalid_argument("data_loss: empty batch");
  if (predictions.size() != observations.size())
    throw std::invalid_argument("data_loss: prediction/observation length mismatch");
  Scalar acc(0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Scalar e = predictions[i] - observations[i];
    acc = acc + e * e;
  }
  return acc / static_cast<double>(predictions.size());
}

Scalar ic_loss(const Scalar& x0_hat, double x0) {
  const Scalar e = x0_hat - x0;
  return e * e;
}

Scalar mean_sq(std::span<const Scalar> values) {
  if (values.empty()) throw std::invalid_argument("mean_sq: empty batch");
  Scalar acc(0.0);
  for (const Scalar& v : values) acc = acc + v * v;
  return acc / static_cast<double>(values.size());
}

Forward::Forward(const network::Mlp& net)
    : tape(&net.tape()), fn([&net](const Scalar& t) { return net.forward(t); }) {}

Forward::Forward(autodiff::Tape& tape_, std::function<Scalar(const Scalar&)> fn_)
    : tape(&tape_), fn(std::move(fn_)) {}

namespace {

template <typename MakeResidual>
Scalar residual_mean(const Forward& forward, std::span<const double> collocation,
                     MakeResidual&& make) {
  if (collocation.empty()) throw std::invalid_argument("residual loss: empty collocation set");
  Scalar acc(0.0);
  for (double ti : collocation) {
    const Scalar t = forward.tape->leaf(ti);
    const Scalar x = forward.fn(t);
    const Scalar r = make(t, x);
    acc = acc + r * r;
  }
  return acc / static_cast<double>(collocation.size());
}

}  // namespace

Scalar residual_loss(const Forward& forward, const Rhs1& f, std::span<const double> collocation) {
  return residual_mean(forward, collocation, [&](const Scalar& t, const Scalar& x) {
    return derivative(x, t) - f(t, x);
  });
}

Scalar granular_residual_loss(const Forward& forward, const Residual1& residual,
                              std::span<const double> collocation) {
  return residual_mean(forward, collocation, [&](const Scalar& t, const Scalar& x) {
    return residual(t, x, derivative(x, t));
  });
}

Scalar granular_residual_loss(const Forward& forward, const Residual2& residual,
                              std::span<const double> collocation) {
  return residual_mean(forward, collocation, [&](const Scalar& t, const Scalar& x) {
    const Scalar xdot = derivative(x, t);
    const Scalar xddot = derivative(xdot, t);
    return residual(t, x, xdot, xddot);
  });
}

Scalar possibility_factor(const Scalar& mu, double m) {
  if (!(m > 1.0)) throw std::invalid_argument("possibility_factor: M must exceed 1");
  return pow(Scalar(m), 1.0 - mu);
}

Scalar sureness(const Scalar& mu, const Scalar& likelihood) { return mu * likelihood; }

Scalar sureness_loss(const Scalar& s) {
  const Scalar d = 1.0 - s;
  return d * d;
}

Scalar zero_residual_likelihood(const Scalar& offset, const Scalar& slope,
                                const prob::Normal& base) {
  const double slope_v = slope.value();
  const double var_v = slope_v * slope_v * base.variance;
  if (var_v == 0.0) return Scalar(offset.value() == 0.0 ? 1.0 : 0.0);
  const double mean_v = offset.value() + slope_v * base.mean;
  const double exponent = mean_v * mean_v / (2.0 * var_v);
  // exp(-x) is exactly 0.0 past this point; avoid recording the overflow-prone ratio
  if (!(exponent < 745.0)) return Scalar(0.0);
  const Scalar mean_g = offset + slope * base.mean;
  const Scalar var_g = slope * slope * base.variance;
  return exp(-(mean_g * mean_g) / (var_g * 2.0));
}

Scalar rule_loss(const fuzzy::RuleSet& rs, std::span<const double> inputs, const Scalar& output,
                 double penalty) {
  if (!(penalty >= 1.0)) throw std::invalid_argument("rule_loss: penalty must be at least 1");
  const Scalar r = fuzzy::restriction(rs, inputs, output);
  const Scalar d = 1.0 - r;
  return d * d * penalty;
}

namespace {

template <typename Output>
Scalar rule_mean(const Forward& forward, const fuzzy::RuleSet& rs,
                 std::span<const double> collocation, double penalty, Output&& out_of) {
  if (collocation.empty()) throw std::invalid_argument("rule loss: empty collocation set");
  if (rs.arity() != 1)
    throw std::invalid_argument("rule loss over collocation expects single-antecedent rules");
  Scalar acc(0.0);
  for (double ti : collocation) {
    const Scalar t = forward.tape->leaf(ti);
    const double in[] = {ti};
    acc = acc + rule_loss(rs, in, out_of(t), penalty);
  }
  return acc / static_cast<double>(collocation.size());
}

}  // namespace

Scalar state_rule_loss(const Forward& forward, const fuzzy::RuleSet& rs,
                       std::span<const double> collocation, double penalty) {
  return rule_mean(forward, rs, collocation, penalty,
                   [&](const Scalar& t) { return forward.fn(t); });
}

Scalar derivative_rule_loss(const Forward& forward, const fuzzy::RuleSet& rs,
                            std::span<const double> collocation, double penalty) {
  return rule_mean(forward, rs, collocation, penalty, [&](const Scalar& t) {
    const Scalar x = forward.fn(t);
    return derivative(x, t);
  });
}

std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::kSingular: return "singular";
    case Preset::kPossibility: return "possibility";
    case Preset::kProbability: return "probability";
    case Preset::kSureness: return "sureness";
    case Preset::kFinn: return "finn";
    case Preset::kFinnDerivative: return "finn-derivative";
  }
  return "?";
}

std::optional<Preset> preset_from_name(std::string_view name) {
  for (Preset p : {Preset::kSingular, Preset::kPossibility, Preset::kProbability,
                   Preset::kSureness, Preset::kFinn, Preset::kFinnDerivative}) {
    if (name == preset_name(p)) return p;
  }
  return std::nullopt;
}

}  // namespace perceptlab::losses
