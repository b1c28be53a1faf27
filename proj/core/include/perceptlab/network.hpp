// Small fully connected approximator over autodiff scalars (tanh hidden
// layers, identity output) plus sigmoid-reparameterized constrained
// parameters for learnable quantities that must stay inside an interval.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "perceptlab/autodiff.hpp"

namespace perceptlab::network {

class Mlp {
 public:
  /// Xavier-uniform weights, zero biases; deterministic per seed. Weights and
  /// biases are recorded as tape leaves, so create the network before taking
  /// the rewind mark of a training loop.
  static Mlp init(autodiff::Tape& tape, std::vector<int> widths, std::uint64_t seed);

  autodiff::Scalar forward(const autodiff::Scalar& input) const;
  autodiff::Scalar forward(std::span<const autodiff::Scalar> inputs) const;

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }

  /// Leaf handles of all weights and biases, in snapshot order.
  std::vector<autodiff::Scalar> parameters() const;

  std::vector<double> snapshot() const;
  void restore(std::span<const double> values);

  autodiff::Tape& tape() const { return *tape_; }

 private:
  Mlp(autodiff::Tape& tape, std::vector<int> widths);

  autodiff::Tape* tape_;
  std::vector<int> widths_;
  // per layer: weights row-major [out][in], then biases [out]
  std::vector<std::vector<std::int32_t>> weights_;
  std::vector<std::vector<std::int32_t>> biases_;
};

/// A learnable value, optionally squashed into (lo, hi). The exposed value of
/// a bounded parameter is lo + (hi-lo) * sigmoid(raw) with the sigmoid output
/// clamped a hair inside (0, 1), so it never reaches the bounds even for
/// extreme raw values. Pinned parameters are plain constants with no
/// gradient, used to freeze a quantity at a chosen level.
class ConstrainedParam {
 public:
  static ConstrainedParam bounded(autodiff::Tape& tape, double lo, double hi, double raw0 = 0.0);
  static ConstrainedParam free_param(autodiff::Tape& tape, double value0);
  static ConstrainedParam pinned(double value);

  /// Recorded on first use after each rewind; call inside the loss producer.
  autodiff::Scalar value() const;

  /// Same transform evaluated in plain doubles (telemetry probes).
  double current_value() const;

  bool learnable() const { return node_ >= 0; }
  autodiff::Scalar raw() const;
  double raw_value() const;

 private:
  ConstrainedParam() = default;

  autodiff::Tape* tape_ = nullptr;
  std::int32_t node_ = -1;
  bool has_bounds_ = false;
  double lo_ = 0.0, hi_ = 0.0;
  double pinned_value_ = 0.0;
};

}  // namespace perceptlab::network
