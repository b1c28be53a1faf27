// Independent ground truth, kept away from autodiff on purpose: closed-form
// solutions for the two built-in ODE families, a classical RK4 integrator,
// brute-force alpha-cut envelopes, and Monte Carlo ensembles. Trained results
// are always verified against these.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "perceptlab/fuzzy.hpp"
#include "perceptlab/prob.hpp"

namespace perceptlab::oracle {

struct ExpDecay {
  double lambda;  // dx/dt = lambda * x
  double x0;
};

struct DampedOscillator {  // x'' + 2 zeta omega x' + omega^2 x = 0, underdamped
  DampedOscillator(double zeta, double omega, double x0, double xdot0);

  double zeta;
  double omega;
  double x0;
  double xdot0;
};

using Family = std::variant<ExpDecay, DampedOscillator>;

double analytic(const Family& family, double t);
double analytic_derivative(const Family& family, double t);

struct CrispODE {
  int order = 1;  // 1 or 2
  std::function<double(double t, double x)> rhs1;
  std::function<double(double t, double x, double xdot)> rhs2;
  double x0 = 0.0;
  double xdot0 = 0.0;

  static CrispODE from(const Family& family);
};

/// Classical 4th-order Runge-Kutta from t_grid.front() (where the initial
/// state applies) through every grid point, sub-stepping at most h.
std::vector<double> rk4(const CrispODE& ode, std::span<const double> t_grid, double h);

struct Envelope {
  std::vector<double> t, lo, hi;
};

/// Named parameter of a family replaced by a fuzzy number for envelope
/// sweeps: "lambda"/"x0" for exp-decay, "zeta"/"omega"/"x0"/"xdot0" for the
/// oscillator.
struct FuzzyParam {
  std::string name;
  fuzzy::TriangularFuzzyNumber number;
};

/// Per-time min/max of RK4 trajectories over a k-point grid of every fuzzy
/// parameter's mu-level cut (full Cartesian product), k >= 2.
Envelope alpha_cut_envelope(const Family& base, std::span<const FuzzyParam> fuzzy_params,
                            double mu, std::span<const double> t_grid, int k, double h);

struct RandomParam {
  std::string name;
  prob::Normal distribution;
};

struct EnsembleStats {
  std::vector<double> t, mean, variance;  // unbiased variance
};

/// Ensemble statistics of RK4 trajectories under parameters sampled from the
/// given normals; n >= 100, deterministic per seed.
EnsembleStats mc_ensemble(const Family& base, std::span<const RandomParam> random_params,
                          std::size_t n, std::uint64_t seed, std::span<const double> t_grid,
                          double h);

}  // namespace perceptlab::oracle
