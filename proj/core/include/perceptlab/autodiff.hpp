// Reverse-mode automatic differentiation on a recording tape.
//
// A Scalar is either a tape-free constant or a handle to a node on a Tape.
// Derivatives come in two flavours:
//   - gradient():   plain adjoint sweep, returns doubles (the fast path used
//                   by the optimizer once per epoch), and
//   - derivative(): builds the adjoint as *recorded expressions* on the same
//                   tape, so the result is itself differentiable. Applying it
//                   twice yields second derivatives; residuals that contain
//                   x'' are built this way.
//
// A tape is single-writer. Recording between rewind() marks is how a training
// loop reuses one tape across epochs: parameters live below the mark, the
// per-epoch graph above it. The recording path is header-inline; it sits on
// the floor of every training epoch.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace perceptlab::autodiff {

class Tape;

enum class Op : std::uint8_t {
  kLeaf,
  // binary, both operands on the tape
  kAdd, kSub, kMul, kDiv, kPow, kMin, kMax,
  // one tape operand `a`, one constant `k`
  kAddC,   // a + k
  kSubC,   // a - k
  kRSubC,  // k - a
  kMulC,   // a * k
  kDivC,   // a / k
  kRDivC,  // k / a
  kPowC,   // a ^ k
  kMinC,   // min(a, k); ties keep the tape operand's derivative
  kMaxC,   // max(a, k); ties keep the tape operand's derivative
  // unary
  kExp, kLn, kTanh, kSin, kAbs,
};

namespace detail {
[[noreturn]] void fail_domain(const char* op, const char* what);
[[noreturn]] void fail_mixed_tapes(const char* op);
[[noreturn]] void fail_stale(const char* op);
[[noreturn]] void fail_tape_full();
const char* op_name(Op op);
}  // namespace detail

class Scalar {
 public:
  Scalar() : Scalar(0.0) {}
  Scalar(double value) : value_(value) {  // tape-free constant; rejects NaN/Inf
    if (!std::isfinite(value)) detail::fail_domain("constant", "NaN/Inf construction");
  }
  Scalar(int value) : Scalar(static_cast<double>(value)) {}

  double value() const { return value_; }
  bool is_constant() const { return node_ < 0; }
  std::int32_t node() const { return node_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Scalar(double value, std::int32_t node, Tape* tape)
      : value_(value), node_(node), tape_(tape) {}

  double value_;
  std::int32_t node_ = -1;
  Tape* tape_ = nullptr;
};

struct Node {
  double value;
  double pa;  // d value / d parent a
  double pb;  // d value / d parent b; holds the constant payload for *C ops
  std::int32_t a;
  std::int32_t b;
  Op op;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// New differentiable input node.
  Scalar leaf(double value) {
    if (!std::isfinite(value)) detail::fail_domain("leaf", "NaN/Inf construction");
    return push(Op::kLeaf, value, -1, -1, 0.0, 0.0);
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t mark() const { return nodes_.size(); }

  /// Truncates the tape back to `mark`. Scalars recorded above the mark
  /// become invalid; leaves below it keep their values.
  void rewind(std::size_t mark);

  /// Incremented on every rewind; lets callers cache per-epoch subgraphs.
  std::uint64_t rewind_count() const { return rewind_count_; }

  /// Handle to an existing node (e.g. a leaf whose value was updated).
  Scalar at(std::int32_t node) const {
    check_index(node);
    return Scalar(nodes_[static_cast<std::size_t>(node)].value, node, const_cast<Tape*>(this));
  }

  double leaf_value(std::int32_t node) const {
    check_index(node);
    return nodes_[static_cast<std::size_t>(node)].value;
  }
  void set_leaf(std::int32_t node, double value);

  const Node& node(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)]; }

  void reserve(std::size_t n) { nodes_.reserve(n); }

  Scalar record_binary(Op op, const Scalar& a, const Scalar& b) {
    check_live(a, op);
    check_live(b, op);
    const double av = a.value(), bv = b.value();
    double v, pa, pb;
    switch (op) {
      case Op::kAdd: v = av + bv; pa = 1; pb = 1; break;
      case Op::kSub: v = av - bv; pa = 1; pb = -1; break;
      case Op::kMul: v = av * bv; pa = bv; pb = av; break;
      case Op::kDiv:
        if (bv == 0.0) detail::fail_domain("div", "division by zero");
        v = av / bv; pa = 1.0 / bv; pb = -v / bv;
        break;
      case Op::kPow:
        if (av <= 0.0)
          detail::fail_domain("pow", "base must be positive for a non-constant exponent");
        v = std::pow(av, bv); pa = v * bv / av; pb = v * std::log(av);
        break;
      case Op::kMin:  // ties keep the first operand
        if (av <= bv) { v = av; pa = 1; pb = 0; } else { v = bv; pa = 0; pb = 1; }
        break;
      case Op::kMax:
        if (av >= bv) { v = av; pa = 1; pb = 0; } else { v = bv; pa = 0; pb = 1; }
        break;
      default: detail::fail_domain("record_binary", "bad op");
    }
    return push(op, v, a.node(), b.node(), pa, pb);
  }

  Scalar record_with_const(Op op, const Scalar& a, double k) {
    check_live(a, op);
    const double av = a.value();
    double v, pa;
    switch (op) {
      case Op::kAddC: v = av + k; pa = 1; break;
      case Op::kSubC: v = av - k; pa = 1; break;
      case Op::kRSubC: v = k - av; pa = -1; break;
      case Op::kMulC: v = av * k; pa = k; break;
      case Op::kDivC:
        if (k == 0.0) detail::fail_domain("div", "division by zero");
        v = av / k; pa = 1.0 / k;
        break;
      case Op::kRDivC:
        if (av == 0.0) detail::fail_domain("div", "division by zero");
        v = k / av; pa = -v / av;
        break;
      case Op::kPowC:
        if (av < 0.0 && std::nearbyint(k) != k)
          detail::fail_domain("pow", "base must be positive for a fractional exponent");
        if (av == 0.0 && k < 0.0) detail::fail_domain("pow", "zero base with negative exponent");
        v = std::pow(av, k);
        pa = (k == 0.0) ? 0.0 : k * std::pow(av, k - 1.0);
        break;
      case Op::kMinC:
        if (av <= k) { v = av; pa = 1; } else { v = k; pa = 0; }
        break;
      case Op::kMaxC:
        if (av >= k) { v = av; pa = 1; } else { v = k; pa = 0; }
        break;
      default: detail::fail_domain("record_with_const", "bad op");
    }
    return push(op, v, a.node(), -1, pa, k);
  }

  Scalar record_unary(Op op, const Scalar& a) {
    check_live(a, op);
    const double av = a.value();
    double v, pa;
    switch (op) {
      case Op::kExp: v = std::exp(av); pa = v; break;
      case Op::kLn:
        if (av <= 0.0) detail::fail_domain("ln", "argument must be positive");
        v = std::log(av); pa = 1.0 / av;
        break;
      case Op::kTanh: v = std::tanh(av); pa = 1.0 - v * v; break;
      case Op::kSin: v = std::sin(av); pa = std::cos(av); break;
      case Op::kAbs:  // left-derivative at 0
        v = std::fabs(av); pa = av > 0.0 ? 1.0 : -1.0;
        break;
      default: detail::fail_domain("record_unary", "bad op");
    }
    return push(op, v, a.node(), -1, pa, 0.0);
  }

  /// d output / d input as a recorded expression on this tape. Returns a
  /// constant 0 when `output` does not depend on `input`.
  Scalar derivative(const Scalar& output, const Scalar& input);

 private:
  Scalar push(Op op, double value, std::int32_t a, std::int32_t b, double pa, double pb) {
    if (!std::isfinite(value)) detail::fail_domain(detail::op_name(op), "non-finite result");
    if (nodes_.size() >= kMaxNodes) detail::fail_tape_full();
    const auto idx = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{value, pa, pb, a, b, op});
    return Scalar(value, idx, this);
  }

  void check_live(const Scalar& s, Op op) const {
    if (s.node() >= static_cast<std::int32_t>(nodes_.size()))
      detail::fail_stale(detail::op_name(op));
  }
  void check_index(std::int32_t node) const {
    if (node < 0 || node >= static_cast<std::int32_t>(nodes_.size()))
      detail::fail_stale("node index");
  }

  static constexpr std::size_t kMaxNodes = 0x7ffffff0u;

  std::vector<Node> nodes_;
  std::uint64_t rewind_count_ = 0;

  // stamped scratch for derivative(); reused across calls without clearing
  std::vector<std::uint64_t> dep_stamp_;
  std::vector<std::uint64_t> adj_stamp_;
  std::vector<double> adj_value_;
  std::vector<std::int32_t> adj_node_;
  std::uint64_t stamp_ = 0;
};

namespace detail {

inline Tape* common_tape(const Scalar& a, const Scalar& b, Op op) {
  Tape* ta = a.is_constant() ? nullptr : a.tape();
  Tape* tb = b.is_constant() ? nullptr : b.tape();
  if (ta && tb && ta != tb) fail_mixed_tapes(op_name(op));
  return ta ? ta : tb;
}

double fold(Op op, double a, double b);

inline Scalar binary(Op op, const Scalar& a, const Scalar& b) {
  Tape* t = common_tape(a, b, op);
  if (!t) return Scalar(fold(op, a.value(), b.value()));
  if (b.is_constant()) {
    switch (op) {
      case Op::kAdd: return t->record_with_const(Op::kAddC, a, b.value());
      case Op::kSub: return t->record_with_const(Op::kSubC, a, b.value());
      case Op::kMul: return t->record_with_const(Op::kMulC, a, b.value());
      case Op::kDiv: return t->record_with_const(Op::kDivC, a, b.value());
      case Op::kPow: return t->record_with_const(Op::kPowC, a, b.value());
      case Op::kMin: return t->record_with_const(Op::kMinC, a, b.value());
      case Op::kMax: return t->record_with_const(Op::kMaxC, a, b.value());
      default: fail_domain("binary", "bad op");
    }
  }
  if (a.is_constant()) {
    switch (op) {
      case Op::kAdd: return t->record_with_const(Op::kAddC, b, a.value());
      case Op::kSub: return t->record_with_const(Op::kRSubC, b, a.value());
      case Op::kMul: return t->record_with_const(Op::kMulC, b, a.value());
      case Op::kDiv: return t->record_with_const(Op::kRDivC, b, a.value());
      case Op::kPow: {
        // k^x = exp(x ln k)
        if (a.value() <= 0.0)
          fail_domain("pow", "base must be positive for a non-constant exponent");
        return t->record_unary(Op::kExp, t->record_with_const(Op::kMulC, b, std::log(a.value())));
      }
      case Op::kMin: return t->record_with_const(Op::kMinC, b, a.value());
      case Op::kMax: return t->record_with_const(Op::kMaxC, b, a.value());
      default: fail_domain("binary", "bad op");
    }
  }
  return t->record_binary(op, a, b);
}

Scalar unary_constant(Op op, const Scalar& a);

inline Scalar unary(Op op, const Scalar& a) {
  if (a.is_constant()) return unary_constant(op, a);
  return a.tape()->record_unary(op, a);
}

}  // namespace detail

inline Scalar operator+(const Scalar& a, const Scalar& b) { return detail::binary(Op::kAdd, a, b); }
inline Scalar operator-(const Scalar& a, const Scalar& b) { return detail::binary(Op::kSub, a, b); }
inline Scalar operator*(const Scalar& a, const Scalar& b) { return detail::binary(Op::kMul, a, b); }
inline Scalar operator/(const Scalar& a, const Scalar& b) { return detail::binary(Op::kDiv, a, b); }
inline Scalar operator-(const Scalar& a) { return a * Scalar(-1.0); }

inline Scalar operator+(const Scalar& a, double b) { return a + Scalar(b); }
inline Scalar operator+(double a, const Scalar& b) { return Scalar(a) + b; }
inline Scalar operator-(const Scalar& a, double b) { return a - Scalar(b); }
inline Scalar operator-(double a, const Scalar& b) { return Scalar(a) - b; }
inline Scalar operator*(const Scalar& a, double b) { return a * Scalar(b); }
inline Scalar operator*(double a, const Scalar& b) { return Scalar(a) * b; }
inline Scalar operator/(const Scalar& a, double b) { return a / Scalar(b); }
inline Scalar operator/(double a, const Scalar& b) { return Scalar(a) / b; }

inline Scalar pow(const Scalar& base, const Scalar& exponent) { return detail::binary(Op::kPow, base, exponent); }
inline Scalar pow(const Scalar& base, double exponent) { return detail::binary(Op::kPow, base, Scalar(exponent)); }
inline Scalar pow(double base, const Scalar& exponent) { return detail::binary(Op::kPow, Scalar(base), exponent); }
inline Scalar exp(const Scalar& a) { return detail::unary(Op::kExp, a); }
inline Scalar ln(const Scalar& a) { return detail::unary(Op::kLn, a); }
inline Scalar tanh(const Scalar& a) { return detail::unary(Op::kTanh, a); }
inline Scalar sin(const Scalar& a) { return detail::unary(Op::kSin, a); }
inline Scalar min(const Scalar& a, const Scalar& b) { return detail::binary(Op::kMin, a, b); }
inline Scalar max(const Scalar& a, const Scalar& b) { return detail::binary(Op::kMax, a, b); }
inline Scalar abs(const Scalar& a) { return detail::unary(Op::kAbs, a); }

/// d output / d inputs[i] for every i, by one adjoint sweep over the tape.
/// Inputs the output does not depend on get 0. Constant output gives all 0.
std::vector<double> gradient(const Scalar& output, std::span<const Scalar> inputs);

/// Differentiable first derivative; see Tape::derivative.
Scalar derivative(const Scalar& output, const Scalar& input);

/// d^2 output / d input^2, via differentiation of the recorded derivative.
double derivative_of_derivative(const Scalar& output, const Scalar& input);

}  // namespace perceptlab::autodiff
