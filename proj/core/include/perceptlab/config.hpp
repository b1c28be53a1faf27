// Declarative experiment configs: a flat sectioned key=value format with
// strict parsing. Unknown keys are rejected, every numeric field is
// range-checked, and all problems are reported together with line numbers
// instead of stopping at the first one. See the README for the grammar.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "perceptlab/fuzzy.hpp"
#include "perceptlab/losses.hpp"
#include "perceptlab/prob.hpp"
#include "perceptlab/train.hpp"

namespace perceptlab::config {

enum class ExperimentKind {
  kPinnDecay,
  kFcinnDecay,
  kSinnetOscillator,
  kFinnCase1,
  kFinnDerivativeCase2,
  kFinnController,
};

std::string_view experiment_name(ExperimentKind kind);
std::optional<ExperimentKind> experiment_from_name(std::string_view name);
std::span<const ExperimentKind> all_experiments();

struct OdeConfig {
  std::string family = "exp-decay";  // exp-decay | damped-oscillator
  double lambda = -0.5;
  double x0 = 5.0;
  double omega = 2.0;
  double zeta = 0.2;
  double xdot0 = 0.0;
};

struct FuzzyConfig {
  std::optional<fuzzy::TriangularFuzzyNumber> lambda;
  std::optional<fuzzy::TriangularFuzzyNumber> zeta;
  std::optional<fuzzy::TriangularFuzzyNumber> x0;
  std::vector<double> pin_mu;     // nonempty: run per pinned level instead of learning mu
  std::vector<double> pin_alpha;  // companion alpha levels for pinned runs
};

struct ProbConfig {
  std::optional<prob::Normal> lambda;
  std::optional<prob::Normal> zeta;
  int mc_samples = 16;
};

struct DataConfig {
  std::vector<double> t;
  std::vector<double> x;
  int auto_count = 0;  // > 0: sample the modal analytic solution instead
};

struct LossConfig {
  losses::Preset preset = losses::Preset::kSingular;
  double possibility_m = 10.0;
  double rule_m = 5.0;
  bool fuzzy_ic = false;           // apply the possibility factor to the IC loss too
  bool sureness_per_point = false; // per-point sureness losses instead of averaging first
};

struct MembershipSpec {
  std::string shape;           // triangular | trapezoidal | gaussian
  std::vector<double> params;

  fuzzy::MembershipFunction build() const;
};

struct RuleSpec {
  std::vector<std::string> antecedents;  // membership names, one per input
  std::string consequent;
};

struct RulesConfig {
  fuzzy::TNorm tnorm = fuzzy::TNorm::kMin;
  fuzzy::SNorm snorm = fuzzy::SNorm::kMax;
  std::vector<std::pair<std::string, MembershipSpec>> memberships;
  std::vector<RuleSpec> rules;

  const MembershipSpec* find(std::string_view name) const;
  fuzzy::RuleSet build() const;
};

struct ControllerConfig {
  std::string plant = "first-order";  // first-order | second-order
  double gain = 1.0;
  double tau = 1.0;
  double omega = 4.0;
  double zeta = 0.7;
  double dt = 0.01;
  int horizon = 2000;
  int steps_per_sample = 1;
  double e_scale = 0.1;
  double edot_scale = 1.0;
  double u_scale = 1.0;
  double divergence_bound = 1e6;
  std::string reference = "step";  // step | sine | ramp
  double ref_amplitude = 1.0;
  double ref_frequency = 0.5;
  double ref_slope = 0.1;
};

struct OracleConfig {
  double rk4_h = 1e-3;
  int envelope_k = 9;
  double envelope_inflate = 0.05;
  int verify_grid = 301;
  int mc_n = 20000;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kPinnDecay;
  std::string output;  // artifact subdirectory under the output root
  std::vector<int> widths{1, 32, 32, 1};
  train::TrainConfig train;
  LossConfig loss;
  OdeConfig ode;
  FuzzyConfig fuzzy;
  ProbConfig prob;
  DataConfig data;
  RulesConfig rules;
  ControllerConfig controller;
  OracleConfig oracle;
};

struct ParseError {
  int line;  // 0 for file-level problems
  std::string message;
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<ParseError> errors;

  bool ok() const { return config.has_value() && errors.empty(); }
};

/// Fully populated defaults for the named experiment.
ExperimentConfig default_config(ExperimentKind kind);

/// Parses and validates; on any error `config` is empty and `errors` carries
/// every problem found. `overrides` are applied after the file content
/// (used by the sweep verb) and bypass duplicate detection.
ParseResult parse_config(std::string_view text,
                         std::span<const std::pair<std::string, std::string>> overrides = {});

/// Canonical text form; parse_config(serialize(c)) reproduces c exactly.
std::string serialize(const ExperimentConfig& cfg);

}  // namespace perceptlab::config
