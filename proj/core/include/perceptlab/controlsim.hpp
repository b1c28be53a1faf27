// Discrete-time closed loop where the network is the controller and learns
// online from the fuzzy-rule restriction alone: no pre-training, no
// defuzzification. Each step evaluates u = net(e, de/dt), takes one (or
// cfg-many) gradient steps on the rule loss at the current sample, then
// advances the plant with the pre-update control.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "perceptlab/autodiff.hpp"
#include "perceptlab/fuzzy.hpp"
#include "perceptlab/network.hpp"
#include "perceptlab/train.hpp"

namespace perceptlab::controlsim {

class Plant {
 public:
  /// tau * dy/dt = gain * u - y
  static Plant first_order(double gain, double tau, double dt);
  /// y'' + 2 zeta omega y' + omega^2 y = omega^2 u
  static Plant second_order(double omega, double zeta, double dt);

  double output() const { return x_; }
  double dt() const { return dt_; }

  /// Advance one dt with the input held constant (RK4 sub-steps).
  void advance(double u);

  void reset(double x0 = 0.0, double xdot0 = 0.0);

 private:
  Plant() = default;

  enum class Kind { kFirstOrder, kSecondOrder } kind_ = Kind::kFirstOrder;
  double gain_ = 1.0, tau_ = 1.0;      // first order
  double omega_ = 1.0, zeta_ = 0.7;    // second order
  double dt_ = 0.01;
  int substeps_ = 4;
  double x_ = 0.0, xdot_ = 0.0;
};

struct LoopRecord {
  double time;
  double reference;
  double output;
  double error;       // reference - output, exactly
  double error_rate;  // backward difference of the error over dt
  double control;
  double rule_loss;   // instantaneous, at the applied sample
};

/// Canonical 3x3 antisymmetric PD table over normalized universes [-1, 1]:
/// N/Z/P triangles on (e, de/dt) -> u, min t-norm, max s-norm.
fuzzy::RuleSet rule_table();

struct Reference {
  enum class Kind { kStep, kSine, kRamp } kind = Kind::kStep;
  double amplitude = 1.0;
  double frequency = 1.0;  // Hz, sine only
  double slope = 1.0;      // ramp only

  double operator()(double t) const;
};

struct LoopConfig {
  int horizon = 2000;
  int steps_per_sample = 1;
  double e_scale = 0.1;     // error normalization gain
  double edot_scale = 1.0;  // error-rate normalization gain
  double u_scale = 1.0;     // control denormalization gain
  double rule_penalty = 5.0;
  double divergence_bound = 1e6;
  train::AdamParams adam{.learning_rate = 1e-2};
};

class PlantDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs the loop, training the (freshly initialized) controller online.
/// `mark` is the tape position right after the network parameters.
std::vector<LoopRecord> run_closed_loop(Plant plant, network::Mlp& controller, std::size_t mark,
                                        const fuzzy::RuleSet& rules, const Reference& reference,
                                        const LoopConfig& cfg);

/// Same loop with the control pinned to zero and no training; the tracking
/// baseline trained runs are compared against.
std::vector<LoopRecord> run_zero_controller(Plant plant, const Reference& reference, int horizon);

}  // namespace perceptlab::controlsim
