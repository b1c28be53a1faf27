// Experiment registry and runner: builds the trainable setup for a config
// (tape, network, learnable granule coordinates, composite loss per preset),
// executes it, persists artifacts (telemetry / snapshot / trajectory CSVs and
// a machine-readable verification report), and re-verifies artifact
// directories against the independent oracles.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perceptlab/config.hpp"
#include "perceptlab/controlsim.hpp"
#include "perceptlab/network.hpp"
#include "perceptlab/oracle.hpp"
#include "perceptlab/train.hpp"

namespace perceptlab::experiments {

struct ExperimentInfo {
  std::string_view name;
  std::string_view description;
  std::string_view anchor;  // the governing equations / rules, in plain text
};

std::span<const ExperimentInfo> list_experiments();
const ExperimentInfo* find_experiment(std::string_view name);
std::string closest_experiment(std::string_view name);

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  std::string op;  // lt | le | ge
  bool pass = false;
};

struct VerificationReport {
  std::string experiment;
  std::vector<CheckResult> checks;

  bool overall() const;
};

std::string report_to_text(const VerificationReport& report);
VerificationReport report_from_text(std::string_view text);

struct RunArtifact {
  std::filesystem::path dir;
  VerificationReport report;
};

/// Executes the experiment and writes all artifacts atomically under
/// out_root / cfg.output: config.resolved, telemetry CSV(s), snapshot(s),
/// trajectory CSV(s), experiment-specific oracle files, and report.txt.
RunArtifact run(const config::ExperimentConfig& cfg, const std::filesystem::path& out_root);

/// Recomputes the verification report for an artifact directory from its
/// persisted files (read-only).
VerificationReport verify(const std::filesystem::path& artifact_dir);

// --- training-setup wiring, exposed for tests -------------------------------

struct PinnedGranule {
  double mu;
  double alpha;
};

/// Everything one ODE training run owns. Loss producers hold pointers back
/// into the struct, so it is created behind a unique_ptr and never moved.
struct TrainingSetup {
  config::ExperimentConfig cfg;
  autodiff::Tape tape;
  std::optional<network::Mlp> net;
  std::optional<network::ConstrainedParam> mu;        // shared possibility level
  std::optional<network::ConstrainedParam> alpha_lambda;
  std::optional<network::ConstrainedParam> alpha_zeta;
  std::optional<network::ConstrainedParam> alpha_x0;
  std::optional<fuzzy::RuleSet> rules;
  std::vector<autodiff::Scalar> trainables;
  std::vector<double> collocation;
  std::vector<double> data_t, data_x;
  std::vector<double> mc_samples;  // probability preset draws
  losses::CompositeLoss loss;
  std::vector<train::Probe> probes;
  std::size_t mark = 0;

  // per-epoch forward/derivative cache shared between loss terms
  struct Batch {
    std::uint64_t rewind_count = ~0ull;
    bool second_order = false;
    std::vector<autodiff::Scalar> x, xdot, xddot;
  };
  Batch batch;

  void ensure_batch(bool second_order);

  train::FitResult fit();
  /// Network values on a time grid (leaves the tape rewound to the mark).
  std::vector<double> evaluate(std::span<const double> ts);
  double evaluate_derivative(double t);
};

std::unique_ptr<TrainingSetup> make_setup(const config::ExperimentConfig& cfg,
                                          std::optional<PinnedGranule> pin = std::nullopt);

/// Modal (crisp) oracle family described by the config's [ode] section.
oracle::Family modal_family(const config::ExperimentConfig& cfg);

}  // namespace perceptlab::experiments
