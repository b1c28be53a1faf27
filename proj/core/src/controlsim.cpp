#include "perceptlab/controlsim.hpp"

#include <cmath>

#include "perceptlab/losses.hpp"

namespace perceptlab::controlsim {

using autodiff::Scalar;

Plant Plant::first_order(double gain, double tau, double dt) {
  if (!(tau > 0.0)) throw std::invalid_argument("plant: tau must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("plant: dt must be positive");
  Plant p;
  p.kind_ = Kind::kFirstOrder;
  p.gain_ = gain;
  p.tau_ = tau;
  p.dt_ = dt;
  return p;
}

Plant Plant::second_order(double omega, double zeta, double dt) {
  if (!(omega > 0.0)) throw std::invalid_argument("plant: omega must be positive");
  if (!(zeta > 0.0)) throw std::invalid_argument("plant: zeta must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("plant: dt must be positive");
  Plant p;
  p.kind_ = Kind::kSecondOrder;
  p.omega_ = omega;
  p.zeta_ = zeta;
  p.dt_ = dt;
  return p;
}

void Plant::advance(double u) {
  const double h = dt_ / substeps_;
  for (int s = 0; s < substeps_; ++s) {
    if (kind_ == Kind::kFirstOrder) {
      auto f = [&](double x) { return (gain_ * u - x) / tau_; };
      const double k1 = f(x_);
      const double k2 = f(x_ + 0.5 * h * k1);
      const double k3 = f(x_ + 0.5 * h * k2);
      const double k4 = f(x_ + h * k3);
      x_ += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      auto f = [&](double x, double xd) {
        return omega_ * omega_ * (u - x) - 2.0 * zeta_ * omega_ * xd;
      };
      const double k1x = xdot_, k1v = f(x_, xdot_);
      const double k2x = xdot_ + 0.5 * h * k1v, k2v = f(x_ + 0.5 * h * k1x, xdot_ + 0.5 * h * k1v);
      const double k3x = xdot_ + 0.5 * h * k2v, k3v = f(x_ + 0.5 * h * k2x, xdot_ + 0.5 * h * k2v);
      const double k4x = xdot_ + h * k3v, k4v = f(x_ + h * k3x, xdot_ + h * k3v);
      x_ += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
      xdot_ += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
  }
  if (!std::isfinite(x_) || !std::isfinite(xdot_))
    throw PlantDivergence("plant state went non-finite");
}

void Plant::reset(double x0, double xdot0) {
  x_ = x0;
  xdot_ = xdot0;
}

fuzzy::RuleSet rule_table() {
  using fuzzy::MembershipFunction;
  const MembershipFunction neg = MembershipFunction::triangular(-1.0, -1.0, 0.0);
  const MembershipFunction zero = MembershipFunction::triangular(-1.0, 0.0, 1.0);
  const MembershipFunction pos = MembershipFunction::triangular(0.0, 1.0, 1.0);
  const MembershipFunction level[3] = {neg, zero, pos};
  // u level per (e, edot), antisymmetric under sign flip
  static constexpr int kTable[3][3] = {
      // edot:  N  Z  P        e:
      {0, 0, 1},  // N
      {0, 1, 2},  // Z
      {1, 2, 2},  // P
  };
  std::vector<fuzzy::Rule> rules;
  rules.reserve(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      rules.push_back(fuzzy::Rule{{level[i], level[j]}, level[kTable[i][j]]});
  return fuzzy::RuleSet(std::move(rules), fuzzy::TNorm::kMin, fuzzy::SNorm::kMax);
}

double Reference::operator()(double t) const {
  switch (kind) {
    case Kind::kStep: return amplitude;
    case Kind::kSine: return amplitude * std::sin(2.0 * 3.141592653589793 * frequency * t);
    case Kind::kRamp: return slope * t;
  }
  return 0.0;
}

namespace {

double clamp_unit(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

std::vector<LoopRecord> run_closed_loop(Plant plant, network::Mlp& controller, std::size_t mark,
                                        const fuzzy::RuleSet& rules, const Reference& reference,
                                        const LoopConfig& cfg) {
  if (cfg.horizon < 1) throw std::invalid_argument("loop: horizon must be at least 1");
  if (cfg.steps_per_sample < 1)
    throw std::invalid_argument("loop: steps_per_sample must be at least 1");
  if (controller.input_dim() != 2)
    throw std::invalid_argument("loop: controller network must take (e, edot)");

  autodiff::Tape& tape = controller.tape();
  const auto params = controller.parameters();
  train::Adam optimizer(cfg.adam, params.size());

  std::vector<LoopRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.horizon));
  double e_prev = 0.0;
  for (int k = 0; k < cfg.horizon; ++k) {
    const double t = k * plant.dt();
    const double r = reference(t);
    const double y = plant.output();
    const double e = r - y;
    const double edot = k == 0 ? 0.0 : (e - e_prev) / plant.dt();
    const double en = clamp_unit(e / cfg.e_scale);
    const double edn = clamp_unit(edot / cfg.edot_scale);
    const double inputs[] = {en, edn};

    double u_norm = 0.0;
    double instantaneous_loss = 0.0;
    for (int s = 0; s < cfg.steps_per_sample; ++s) {
      tape.rewind(mark);
      const Scalar in[] = {Scalar(en), Scalar(edn)};
      const Scalar un = controller.forward(in);
      const Scalar loss = losses::rule_loss(rules, inputs, un, cfg.rule_penalty);
      if (s == 0) {
        u_norm = un.value();  // control applied below comes from the pre-update network
        instantaneous_loss = loss.value();
      }
      const auto grads = autodiff::gradient(loss, params);
      std::vector<double> values(params.size());
      for (std::size_t i = 0; i < params.size(); ++i)
        values[i] = tape.leaf_value(params[i].node());
      optimizer.apply(grads, values);
      for (std::size_t i = 0; i < params.size(); ++i)
        tape.set_leaf(params[i].node(), values[i]);
    }

    const double u = cfg.u_scale * u_norm;
    records.push_back(LoopRecord{t, r, y, e, edot, u, instantaneous_loss});
    plant.advance(u);
    if (std::fabs(plant.output()) > cfg.divergence_bound)
      throw PlantDivergence("plant output exceeded the divergence bound");
    e_prev = e;
  }
  return records;
}

std::vector<LoopRecord> run_zero_controller(Plant plant, const Reference& reference, int horizon) {
  if (horizon < 1) throw std::invalid_argument("loop: horizon must be at least 1");
  std::vector<LoopRecord> records;
  records.reserve(static_cast<std::size_t>(horizon));
  double e_prev = 0.0;
  for (int k = 0; k < horizon; ++k) {
    const double t = k * plant.dt();
    const double r = reference(t);
    const double y = plant.output();
    const double e = r - y;
    const double edot = k == 0 ? 0.0 : (e - e_prev) / plant.dt();
    records.push_back(LoopRecord{t, r, y, e, edot, 0.0, 0.0});
    plant.advance(0.0);
    e_prev = e;
  }
  return records;
}

}  // namespace perceptlab::controlsim
