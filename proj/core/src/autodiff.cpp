#include "perceptlab/autodiff.hpp"

#include <stdexcept>
#include <string>

namespace perceptlab::autodiff {

namespace detail {

void fail_domain(const char* op, const char* what) {
  throw std::domain_error(std::string(op) + ": " + what);
}

void fail_mixed_tapes(const char* op) {
  throw std::invalid_argument(std::string(op) + ": scalars live on different tapes");
}

void fail_stale(const char* op) {
  throw std::logic_error(std::string(op) +
                         ": scalar refers past the tape end (recorded before a rewind?)");
}

void fail_tape_full() { throw std::length_error("tape: node limit exceeded"); }

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kAdd: case Op::kAddC: return "add";
    case Op::kSub: case Op::kSubC: case Op::kRSubC: return "sub";
    case Op::kMul: case Op::kMulC: return "mul";
    case Op::kDiv: case Op::kDivC: case Op::kRDivC: return "div";
    case Op::kPow: case Op::kPowC: return "pow";
    case Op::kMin: case Op::kMinC: return "min";
    case Op::kMax: case Op::kMaxC: return "max";
    case Op::kExp: return "exp";
    case Op::kLn: return "ln";
    case Op::kTanh: return "tanh";
    case Op::kSin: return "sin";
    case Op::kAbs: return "abs";
  }
  return "?";
}

double fold(Op op, double a, double b) {
  const char* name = op_name(op);
  double v = 0;
  switch (op) {
    case Op::kAdd: v = a + b; break;
    case Op::kSub: v = a - b; break;
    case Op::kMul: v = a * b; break;
    case Op::kDiv:
      if (b == 0.0) fail_domain("div", "division by zero");
      v = a / b; break;
    case Op::kPow:
      if (a < 0.0 && std::nearbyint(b) != b)
        fail_domain("pow", "base must be positive for a fractional exponent");
      if (a == 0.0 && b < 0.0) fail_domain("pow", "zero base with negative exponent");
      v = std::pow(a, b); break;
    case Op::kMin: v = a <= b ? a : b; break;
    case Op::kMax: v = a >= b ? a : b; break;
    default: fail_domain(name, "bad op");
  }
  if (!std::isfinite(v)) fail_domain(name, "non-finite result");
  return v;
}

Scalar unary_constant(Op op, const Scalar& a) {
  switch (op) {
    case Op::kExp: {
      const double v = std::exp(a.value());
      if (!std::isfinite(v)) fail_domain("exp", "non-finite result");
      return Scalar(v);
    }
    case Op::kLn:
      if (a.value() <= 0.0) fail_domain("ln", "argument must be positive");
      return Scalar(std::log(a.value()));
    case Op::kTanh: return Scalar(std::tanh(a.value()));
    case Op::kSin: return Scalar(std::sin(a.value()));
    case Op::kAbs: return Scalar(std::fabs(a.value()));
    default: fail_domain("unary", "bad op");
  }
}

}  // namespace detail

void Tape::rewind(std::size_t mark) {
  if (mark > nodes_.size()) throw std::logic_error("tape: rewind past the end");
  nodes_.resize(mark);
  ++rewind_count_;
}

void Tape::set_leaf(std::int32_t node, double value) {
  check_index(node);
  Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.op != Op::kLeaf) throw std::logic_error("tape: set_leaf on a non-leaf node");
  if (!std::isfinite(value)) detail::fail_domain("leaf", "NaN/Inf construction");
  n.value = value;
}

std::vector<double> gradient(const Scalar& output, std::span<const Scalar> inputs) {
  std::vector<double> out(inputs.size(), 0.0);
  if (output.is_constant()) return out;
  Tape* tape = output.tape();
  for (const Scalar& in : inputs) {
    if (!in.is_constant() && in.tape() != tape)
      throw std::invalid_argument("gradient: input lives on a different tape");
  }

  const auto n = static_cast<std::size_t>(output.node()) + 1;
  std::vector<double> adj(n, 0.0);
  adj[n - 1] = 1.0;
  for (std::size_t i = n; i-- > 0;) {
    const double g = adj[i];
    if (g == 0.0) continue;
    const Node& nd = tape->node(static_cast<std::int32_t>(i));
    if (nd.a >= 0) adj[static_cast<std::size_t>(nd.a)] += g * nd.pa;
    if (nd.b >= 0) adj[static_cast<std::size_t>(nd.b)] += g * nd.pb;
  }
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    const Scalar& in = inputs[j];
    if (in.is_constant() || static_cast<std::size_t>(in.node()) >= n) continue;
    out[j] = adj[static_cast<std::size_t>(in.node())];
  }
  return out;
}

Scalar Tape::derivative(const Scalar& output, const Scalar& input) {
  if (output.is_constant() || input.is_constant()) return Scalar(0.0);
  if (output.tape() != this || input.tape() != this)
    throw std::invalid_argument("derivative: scalars live on a different tape");
  check_live(output, Op::kLeaf);
  check_live(input, Op::kLeaf);
  if (output.node() == input.node()) return Scalar(1.0);
  if (input.node() > output.node()) return Scalar(0.0);

  const auto lo = static_cast<std::size_t>(input.node());
  const auto hi = static_cast<std::size_t>(output.node());
  if (dep_stamp_.size() <= hi) {
    dep_stamp_.resize(hi + 1, 0);
    adj_stamp_.resize(hi + 1, 0);
    adj_value_.resize(hi + 1, 0.0);
    adj_node_.resize(hi + 1, -1);
  }
  const std::uint64_t st = ++stamp_;

  // forward pass: which nodes in [lo, hi] depend on the input
  dep_stamp_[lo] = st;
  auto depends = [&](std::int32_t p) {
    return p >= static_cast<std::int32_t>(lo) && dep_stamp_[static_cast<std::size_t>(p)] == st;
  };
  for (std::size_t i = lo + 1; i <= hi; ++i) {
    const Node& nd = nodes_[i];
    if (depends(nd.a) || depends(nd.b)) dep_stamp_[i] = st;
  }
  if (dep_stamp_[hi] != st) return Scalar(0.0);

  auto adj_get = [&](std::size_t i) {
    const std::int32_t n = adj_node_[i];
    return n >= 0 ? Scalar(adj_value_[i], n, this) : Scalar(adj_value_[i]);
  };
  auto adj_add = [&](std::size_t i, const Scalar& c) {
    if (adj_stamp_[i] != st) {
      adj_stamp_[i] = st;
      adj_value_[i] = c.value();
      adj_node_[i] = c.node();
    } else {
      const Scalar s = adj_get(i) + c;
      adj_value_[i] = s.value();
      adj_node_[i] = s.node();
    }
  };

  adj_stamp_[hi] = st;
  adj_value_[hi] = 1.0;
  adj_node_[hi] = -1;

  for (std::size_t i = hi + 1; i-- > lo + 1;) {
    if (dep_stamp_[i] != st || adj_stamp_[i] != st) continue;
    const Scalar ai = adj_get(i);
    if (ai.is_constant() && ai.value() == 0.0) continue;
    const Node nd = nodes_[i];  // copy: recording below may reallocate
    const Scalar self(nd.value, static_cast<std::int32_t>(i), this);
    const bool da = depends(nd.a);
    const bool db = nd.b >= 0 && depends(nd.b);
    switch (nd.op) {
      case Op::kAdd:
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai);
        if (db) adj_add(static_cast<std::size_t>(nd.b), ai);
        break;
      case Op::kSub:
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai);
        if (db) adj_add(static_cast<std::size_t>(nd.b), -ai);
        break;
      case Op::kMul:
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai * at(nd.b));
        if (db) adj_add(static_cast<std::size_t>(nd.b), ai * at(nd.a));
        break;
      case Op::kDiv:
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai / at(nd.b));
        if (db) adj_add(static_cast<std::size_t>(nd.b), -(ai * self) / at(nd.b));
        break;
      case Op::kPow:
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai * self * at(nd.b) / at(nd.a));
        if (db) adj_add(static_cast<std::size_t>(nd.b), ai * self * ln(at(nd.a)));
        break;
      case Op::kMin: case Op::kMax:
        // partials are the recorded 0/1 branch choice
        if (da && nd.pa != 0.0) adj_add(static_cast<std::size_t>(nd.a), ai);
        if (db && nd.pb != 0.0) adj_add(static_cast<std::size_t>(nd.b), ai);
        break;
      case Op::kAddC: case Op::kSubC:
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai);
        break;
      case Op::kRSubC:
        if (da) adj_add(static_cast<std::size_t>(nd.a), -ai);
        break;
      case Op::kMulC:
      case Op::kDivC:
        // pa already encodes the constant factor (k and 1/k respectively)
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai * nd.pa);
        break;
      case Op::kRDivC:
        if (da) adj_add(static_cast<std::size_t>(nd.a), -(ai * self) / at(nd.a));
        break;
      case Op::kPowC: {
        const double k = nd.pb;  // exponent payload
        if (da) {
          if (k == 2.0) adj_add(static_cast<std::size_t>(nd.a), ai * (at(nd.a) * 2.0));
          else if (k == 0.0) { /* constant, no flow */ }
          else adj_add(static_cast<std::size_t>(nd.a), ai * (pow(at(nd.a), k - 1.0) * k));
        }
        break;
      }
      case Op::kMinC: case Op::kMaxC:
        if (da && nd.pa != 0.0) adj_add(static_cast<std::size_t>(nd.a), ai);
        break;
      case Op::kExp:
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai * self);
        break;
      case Op::kLn:
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai / at(nd.a));
        break;
      case Op::kTanh:
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai * (1.0 - self * self));
        break;
      case Op::kSin:
        if (da) adj_add(static_cast<std::size_t>(nd.a), ai * sin(at(nd.a) + 1.5707963267948966));
        break;
      case Op::kAbs:
        if (da) adj_add(static_cast<std::size_t>(nd.a), nd.pa > 0.0 ? ai : -ai);
        break;
      case Op::kLeaf:
        break;
    }
  }
  return adj_stamp_[lo] == st ? adj_get(lo) : Scalar(0.0);
}

Scalar derivative(const Scalar& output, const Scalar& input) {
  if (output.is_constant() || input.is_constant()) return Scalar(0.0);
  return output.tape()->derivative(output, input);
}

double derivative_of_derivative(const Scalar& output, const Scalar& input) {
  const Scalar first = derivative(output, input);
  if (first.is_constant()) return 0.0;
  const Scalar in[] = {input};
  return gradient(first, in)[0];
}

}  // namespace perceptlab::autodiff
