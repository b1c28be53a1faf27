#include "perceptlab/train.hpp"

#include <cmath>
#include <stdexcept>

#include "perceptlab/rng.hpp"

namespace perceptlab::train {

using autodiff::Scalar;
using autodiff::Tape;

std::vector<double> sample_collocation(const CollocationConfig& cfg, std::uint64_t seed) {
  if (cfg.count < 1) throw std::invalid_argument("collocation: count must be at least 1");
  if (!(cfg.lo < cfg.hi)) throw std::invalid_argument("collocation: domain must satisfy lo < hi");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cfg.count));
  if (cfg.strategy == CollocationStrategy::kUniformGrid) {
    if (cfg.count == 1) {
      out.push_back(cfg.lo);
      return out;
    }
    const double n1 = static_cast<double>(cfg.count - 1);
    for (int i = 0; i < cfg.count; ++i)
      out.push_back(cfg.lo + (cfg.hi - cfg.lo) * (static_cast<double>(i) / n1));
    return out;
  }
  Rng rng(seed);
  for (int i = 0; i < cfg.count; ++i) out.push_back(rng.uniform(cfg.lo, cfg.hi));
  return out;
}

Adam::Adam(AdamParams params, std::size_t n) : params_(params), m_(n, 0.0), v_(n, 0.0) {
  if (!(params_.learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
}

void Adam::apply(std::span<const double> gradients, std::span<double> values) {
  if (gradients.size() != m_.size() || values.size() != m_.size())
    throw std::invalid_argument("adam: size mismatch");
  ++t_;
  const double b1 = params_.beta1, b2 = params_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = gradients[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double mh = m_[i] / c1;
    const double vh = v_[i] / c2;
    values[i] -= params_.learning_rate * mh / (std::sqrt(vh) + params_.epsilon);
  }
}

namespace {

losses::CompositeLoss::Evaluation evaluate_checked(const losses::CompositeLoss& loss) {
  try {
    auto eval = loss.evaluate();
    const auto& terms = loss.terms();
    for (std::size_t i = 0; i < eval.term_values.size(); ++i) {
      if (!std::isfinite(eval.term_values[i]))
        throw TrainingError("loss term '" + terms[i].name + "' is non-finite");
    }
    return eval;
  } catch (const std::domain_error& e) {
    // overflow while recording a term counts as a non-finite loss
    throw TrainingError(e.what());
  }
}

std::vector<double> gradient_checked(const Scalar& total, std::span<const Scalar> params) {
  auto grads = autodiff::gradient(total, params);
  for (double g : grads)
    if (!std::isfinite(g)) throw TrainingError("non-finite gradient in total loss");
  return grads;
}

void apply_update(Tape& tape, std::span<const Scalar> params, std::span<const double> grads,
                  Adam& optimizer) {
  std::vector<double> values(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) values[i] = tape.leaf_value(params[i].node());
  optimizer.apply(grads, values);
  for (std::size_t i = 0; i < params.size(); ++i) tape.set_leaf(params[i].node(), values[i]);
}

}  // namespace

StepResult step(Tape& tape, std::size_t mark, const losses::CompositeLoss& loss,
                std::span<const Scalar> params, Adam& optimizer) {
  tape.rewind(mark);
  auto eval = evaluate_checked(loss);
  auto grads = gradient_checked(eval.total, params);
  apply_update(tape, params, grads, optimizer);
  return StepResult{eval.total.value(), std::move(eval.term_values)};
}

FitResult fit(Tape& tape, std::size_t mark, const losses::CompositeLoss& loss,
              std::span<const Scalar> params, const TrainConfig& cfg,
              std::span<const Probe> probes) {
  if (cfg.epochs < 1) throw std::invalid_argument("fit: epochs must be at least 1");

  FitResult result;
  result.telemetry.term_names = loss.term_names();
  for (const Probe& p : probes) result.telemetry.probe_names.push_back(p.name);
  result.telemetry.records.reserve(static_cast<std::size_t>(cfg.epochs));

  Adam optimizer(cfg.adam, params.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    try {
      tape.rewind(mark);
      auto eval = evaluate_checked(loss);

      EpochRecord rec;
      rec.epoch = epoch;
      rec.term_values = eval.term_values;
      rec.total = eval.total.value();
      rec.probe_values.reserve(probes.size());
      for (const Probe& p : probes) rec.probe_values.push_back(p.read());
      result.telemetry.records.push_back(std::move(rec));
      result.final_total = eval.total.value();
      result.epochs_run = epoch;

      if (eval.total.value() < cfg.early_stop_tolerance) {
        result.stopped_early = true;
        break;
      }
      auto grads = gradient_checked(eval.total, params);
      apply_update(tape, params, grads, optimizer);
    } catch (const TrainingError& err) {
      // abort, keeping the telemetry gathered so far
      result.abort_reason = err.what();
      break;
    }
  }
  return result;
}

}  // namespace perceptlab::train
