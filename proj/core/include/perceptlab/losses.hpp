// Loss algebra: data / initial-condition / residual terms, granular (HMF)
// residuals with their possibility factor, the sureness pipeline, fuzzy-rule
// restriction penalties, and the weighted composite that training minimizes.

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perceptlab/autodiff.hpp"
#include "perceptlab/fuzzy.hpp"
#include "perceptlab/network.hpp"
#include "perceptlab/prob.hpp"

namespace perceptlab::losses {

using autodiff::Scalar;

struct LossTerm {
  std::string name;
  double weight = 1.0;
  std::function<Scalar()> producer;  // records on the live tape when called
};

class CompositeLoss {
 public:
  CompositeLoss& add(std::string name, double weight, std::function<Scalar()> producer);

  struct Evaluation {
    Scalar total;                      // sum of weighted terms
    std::vector<double> term_values;   // weighted value per term, same order
  };
  Evaluation evaluate() const;

  const std::vector<LossTerm>& terms() const { return terms_; }
  std::vector<std::string> term_names() const;
  std::size_t size() const { return terms_.size(); }

 private:
  std::vector<LossTerm> terms_;
};

/// Mean squared error between network predictions and observations.
Scalar data_loss(std::span<const Scalar> predictions, std::span<const double> observations);

/// Squared deviation of the predicted initial state.
Scalar ic_loss(const Scalar& x0_hat, double x0);

/// Mean of squared values; building block for residual-style terms.
Scalar mean_sq(std::span<const Scalar> values);

using Rhs1 = std::function<Scalar(const Scalar& t, const Scalar& x)>;
using Residual1 = std::function<Scalar(const Scalar& t, const Scalar& x, const Scalar& xdot)>;
using Residual2 =
    std::function<Scalar(const Scalar& t, const Scalar& x, const Scalar& xdot, const Scalar& xddot)>;

/// Differentiable trajectory: maps a tape-recorded t to x(t). Networks fit
/// here, and so do hand-built stubs in tests.
struct Forward {
  Forward(const network::Mlp& net);  // NOLINT: nets convert implicitly
  Forward(autodiff::Tape& tape, std::function<Scalar(const Scalar& t)> fn);

  autodiff::Tape* tape;
  std::function<Scalar(const Scalar& t)> fn;
};

/// Mean squared first-order residual xdot - f(t, x) over the collocation
/// points, with time derivatives taken on the tape.
Scalar residual_loss(const Forward& forward, const Rhs1& f, std::span<const double> collocation);

/// Mean squared residual with the residual supplied directly; used when fuzzy
/// parameters have been replaced by their HMF granule values (which may be
/// learnable scalars captured by the closure).
Scalar granular_residual_loss(const Forward& forward, const Residual1& residual,
                              std::span<const double> collocation);
Scalar granular_residual_loss(const Forward& forward, const Residual2& residual,
                              std::span<const double> collocation);

/// M^(1-mu), M > 1: weights granular terms by how far the granule sits from
/// full membership; equal to 1 at mu = 1 and to M at mu = 0.
Scalar possibility_factor(const Scalar& mu, double m);

/// Product of possibility degree and likelihood, both in [0, 1].
Scalar sureness(const Scalar& mu, const Scalar& likelihood);

/// (1 - sureness)^2.
Scalar sureness_loss(const Scalar& s);

/// Mode-normalized likelihood that the residual offset + slope*theta is zero
/// under theta ~ base, as a recorded expression of (offset, slope). A zero
/// slope collapses the distribution to a point mass: the likelihood is then
/// the constant 1 iff offset is 0. Values whose exponent would underflow are
/// folded to the constant 0 they would round to.
Scalar zero_residual_likelihood(const Scalar& offset, const Scalar& slope,
                                const prob::Normal& base);

/// penalty * (1 - R)^2 with R the rule-set restriction; penalty >= 1.
Scalar rule_loss(const fuzzy::RuleSet& rs, std::span<const double> inputs, const Scalar& output,
                 double penalty);

/// Mean of rule_loss over collocation with output = x(t).
Scalar state_rule_loss(const Forward& forward, const fuzzy::RuleSet& rs,
                       std::span<const double> collocation, double penalty);

/// Mean of rule_loss over collocation with output = dx/dt.
Scalar derivative_rule_loss(const Forward& forward, const fuzzy::RuleSet& rs,
                            std::span<const double> collocation, double penalty);

enum class Preset { kSingular, kPossibility, kProbability, kSureness, kFinn, kFinnDerivative };

std::string_view preset_name(Preset p);
std::optional<Preset> preset_from_name(std::string_view name);

}  // namespace perceptlab::losses
