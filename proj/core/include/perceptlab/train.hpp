// Optimization loop: collocation sampling, Adam with bias correction, the
// per-epoch record/evaluate/update cycle, and telemetry rows the runner
// serializes to CSV. Runs are strictly deterministic per (config, seed).

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "perceptlab/autodiff.hpp"
#include "perceptlab/losses.hpp"

namespace perceptlab::train {

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

enum class CollocationStrategy { kUniformGrid, kUniformRandom };

struct CollocationConfig {
  int count = 101;
  double lo = 0.0;
  double hi = 3.0;
  CollocationStrategy strategy = CollocationStrategy::kUniformGrid;
};

/// Grid strategy includes both endpoints; random is seed-deterministic.
std::vector<double> sample_collocation(const CollocationConfig& cfg, std::uint64_t seed);

struct TrainConfig {
  int epochs = 5000;
  AdamParams adam;
  CollocationConfig collocation;
  std::uint64_t seed = 0;
  double early_stop_tolerance = 1e-6;
};

class Adam {
 public:
  Adam(AdamParams params, std::size_t n);

  /// In-place parameter update; zero gradients leave values untouched.
  void apply(std::span<const double> gradients, std::span<double> values);

 private:
  AdamParams params_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

/// Raised when a loss term or gradient goes non-finite; names the culprit.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepResult {
  double total;
  std::vector<double> term_values;
};

/// One epoch: rewind to `mark`, evaluate the composite, backprop, Adam-update
/// the parameter leaves. Evaluation happens before the update, so the
/// returned values describe the incoming parameters.
StepResult step(autodiff::Tape& tape, std::size_t mark, const losses::CompositeLoss& loss,
                std::span<const autodiff::Scalar> params, Adam& optimizer);

/// Named read-out logged once per epoch (learned mu, alpha, parameter estimates).
struct Probe {
  std::string name;
  std::function<double()> read;
};

struct EpochRecord {
  int epoch;  // 1-based
  std::vector<double> term_values;
  double total;
  std::vector<double> probe_values;
};

struct RunTelemetry {
  std::vector<std::string> term_names;
  std::vector<std::string> probe_names;
  std::vector<EpochRecord> records;
};

struct FitResult {
  RunTelemetry telemetry;
  int epochs_run = 0;
  double final_total = 0.0;
  bool stopped_early = false;
  // set when a TrainingError stopped the run; telemetry up to the abort is kept
  std::optional<std::string> abort_reason;
};

FitResult fit(autodiff::Tape& tape, std::size_t mark, const losses::CompositeLoss& loss,
              std::span<const autodiff::Scalar> params, const TrainConfig& cfg,
              std::span<const Probe> probes = {});

}  // namespace perceptlab::train
