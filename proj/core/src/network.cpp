#include "perceptlab/network.hpp"

#include <cmath>
#include <stdexcept>

#include "perceptlab/rng.hpp"

namespace perceptlab::network {

using autodiff::Scalar;
using autodiff::Tape;

Mlp::Mlp(Tape& tape, std::vector<int> widths) : tape_(&tape), widths_(std::move(widths)) {}

Mlp Mlp::init(Tape& tape, std::vector<int> widths, std::uint64_t seed) {
  if (widths.size() < 2) throw std::invalid_argument("mlp: need at least input and output widths");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("mlp: zero-width layer");

  Mlp net(tape, std::move(widths));
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < net.widths_.size(); ++l) {
    const int fan_in = net.widths_[l];
    const int fan_out = net.widths_[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<std::int32_t> w(static_cast<std::size_t>(fan_in) * fan_out);
    for (auto& id : w) id = tape.leaf(rng.uniform(-limit, limit)).node();
    std::vector<std::int32_t> b(static_cast<std::size_t>(fan_out));
    for (auto& id : b) id = tape.leaf(0.0).node();
    net.weights_.push_back(std::move(w));
    net.biases_.push_back(std::move(b));
  }
  return net;
}

Scalar Mlp::forward(const Scalar& input) const {
  const Scalar in[] = {input};
  return forward(in);
}

Scalar Mlp::forward(std::span<const Scalar> inputs) const {
  if (static_cast<int>(inputs.size()) != widths_.front())
    throw std::invalid_argument("mlp: input size does not match the first layer width");
  for (const Scalar& s : inputs)
    if (!s.is_constant() && s.tape() != tape_)
      throw std::invalid_argument("mlp: input lives on a different tape");

  std::vector<Scalar> act(inputs.begin(), inputs.end());
  std::vector<Scalar> next;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const int fan_in = widths_[l];
    const int fan_out = widths_[l + 1];
    next.clear();
    next.reserve(static_cast<std::size_t>(fan_out));
    for (int j = 0; j < fan_out; ++j) {
      Scalar z = tape_->at(biases_[l][static_cast<std::size_t>(j)]);
      for (int i = 0; i < fan_in; ++i) {
        const Scalar w = tape_->at(weights_[l][static_cast<std::size_t>(j) * fan_in + i]);
        z = z + w * act[static_cast<std::size_t>(i)];
      }
      next.push_back(l + 1 < weights_.size() ? tanh(z) : z);
    }
    act.swap(next);
  }
  return act.front();
}

std::vector<Scalar> Mlp::parameters() const {
  std::vector<Scalar> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (auto id : weights_[l]) out.push_back(tape_->at(id));
    for (auto id : biases_[l]) out.push_back(tape_->at(id));
  }
  return out;
}

std::vector<double> Mlp::snapshot() const {
  std::vector<double> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (auto id : weights_[l]) out.push_back(tape_->leaf_value(id));
    for (auto id : biases_[l]) out.push_back(tape_->leaf_value(id));
  }
  return out;
}

void Mlp::restore(std::span<const double> values) {
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (auto id : weights_[l]) {
      if (k >= values.size()) throw std::invalid_argument("mlp: snapshot too short");
      tape_->set_leaf(id, values[k++]);
    }
    for (auto id : biases_[l]) {
      if (k >= values.size()) throw std::invalid_argument("mlp: snapshot too short");
      tape_->set_leaf(id, values[k++]);
    }
  }
  if (k != values.size()) throw std::invalid_argument("mlp: snapshot size mismatch");
}

ConstrainedParam ConstrainedParam::bounded(Tape& tape, double lo, double hi, double raw0) {
  if (!(lo < hi)) throw std::invalid_argument("constrained param: lo must be below hi");
  ConstrainedParam p;
  p.tape_ = &tape;
  p.node_ = tape.leaf(raw0).node();
  p.has_bounds_ = true;
  p.lo_ = lo;
  p.hi_ = hi;
  return p;
}

ConstrainedParam ConstrainedParam::free_param(Tape& tape, double value0) {
  ConstrainedParam p;
  p.tape_ = &tape;
  p.node_ = tape.leaf(value0).node();
  return p;
}

ConstrainedParam ConstrainedParam::pinned(double value) {
  ConstrainedParam p;
  p.pinned_value_ = value;
  return p;
}

Scalar ConstrainedParam::value() const {
  if (node_ < 0) return Scalar(pinned_value_);
  const Scalar raw = tape_->at(node_);
  if (!has_bounds_) return raw;
  // saturate the input so exp stays finite, and keep the sigmoid output
  // strictly interior so the exposed value never reaches the bounds
  const Scalar z = min(max(raw, Scalar(-40.0)), Scalar(40.0));
  const Scalar s = 1.0 / (1.0 + exp(-z));
  const Scalar interior = min(max(s, Scalar(1e-9)), Scalar(1.0 - 1e-9));
  return lo_ + (hi_ - lo_) * interior;
}

double ConstrainedParam::current_value() const {
  if (node_ < 0) return pinned_value_;
  const double raw = tape_->leaf_value(node_);
  if (!has_bounds_) return raw;
  const double z = std::min(std::max(raw, -40.0), 40.0);
  const double s = 1.0 / (1.0 + std::exp(-z));
  const double interior = std::min(std::max(s, 1e-9), 1.0 - 1e-9);
  return lo_ + (hi_ - lo_) * interior;
}

Scalar ConstrainedParam::raw() const {
  if (node_ < 0) return Scalar(pinned_value_);
  return tape_->at(node_);
}

double ConstrainedParam::raw_value() const {
  if (node_ < 0) return pinned_value_;
  return tape_->leaf_value(node_);
}

}  // namespace perceptlab::network
