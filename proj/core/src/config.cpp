#include "perceptlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "perceptlab/io.hpp"

namespace perceptlab::config {

namespace {

constexpr ExperimentKind kAll[] = {
    ExperimentKind::kPinnDecay,        ExperimentKind::kFcinnDecay,
    ExperimentKind::kSinnetOscillator, ExperimentKind::kFinnCase1,
    ExperimentKind::kFinnDerivativeCase2, ExperimentKind::kFinnController,
};

const char* kSections[] = {"net",  "train", "loss",       "ode",    "fuzzy",
                           "prob", "data",  "rules",      "controller", "oracle"};

}  // namespace

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kPinnDecay: return "pinn-decay";
    case ExperimentKind::kFcinnDecay: return "fcinn-decay";
    case ExperimentKind::kSinnetOscillator: return "sinnet-oscillator";
    case ExperimentKind::kFinnCase1: return "finn-case1";
    case ExperimentKind::kFinnDerivativeCase2: return "finn-derivative-case2";
    case ExperimentKind::kFinnController: return "finn-controller";
  }
  return "?";
}

std::optional<ExperimentKind> experiment_from_name(std::string_view name) {
  for (ExperimentKind k : kAll)
    if (name == experiment_name(k)) return k;
  return std::nullopt;
}

std::span<const ExperimentKind> all_experiments() { return kAll; }

fuzzy::MembershipFunction MembershipSpec::build() const {
  if (shape == "triangular" && params.size() == 3)
    return fuzzy::MembershipFunction::triangular(params[0], params[1], params[2]);
  if (shape == "trapezoidal" && params.size() == 4)
    return fuzzy::MembershipFunction::trapezoidal(params[0], params[1], params[2], params[3]);
  if (shape == "gaussian" && params.size() == 2)
    return fuzzy::MembershipFunction::gaussian(params[0], params[1]);
  throw std::invalid_argument("membership '" + shape + "' with " +
                              std::to_string(params.size()) + " parameters is not a known shape");
}

const MembershipSpec* RulesConfig::find(std::string_view name) const {
  for (const auto& [n, spec] : memberships)
    if (n == name) return &spec;
  return nullptr;
}

fuzzy::RuleSet RulesConfig::build() const {
  std::vector<fuzzy::Rule> built;
  for (const RuleSpec& r : rules) {
    std::vector<fuzzy::MembershipFunction> ants;
    for (const std::string& name : r.antecedents) {
      const MembershipSpec* spec = find(name);
      if (!spec) throw std::invalid_argument("rule references unknown membership '" + name + "'");
      ants.push_back(spec->build());
    }
    const MembershipSpec* cons = find(r.consequent);
    if (!cons)
      throw std::invalid_argument("rule references unknown membership '" + r.consequent + "'");
    built.push_back(fuzzy::Rule{std::move(ants), cons->build()});
  }
  return fuzzy::RuleSet(std::move(built), tnorm, snorm);
}

// ---------------------------------------------------------------------------
// defaults

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.output = std::string(experiment_name(kind));
  switch (kind) {
    case ExperimentKind::kPinnDecay:
      cfg.loss.preset = losses::Preset::kSingular;
      cfg.train.epochs = 5000;
      break;
    case ExperimentKind::kFcinnDecay:
      cfg.loss.preset = losses::Preset::kPossibility;
      cfg.train.epochs = 3000;
      cfg.ode.family = "exp-decay";
      cfg.fuzzy.lambda = fuzzy::TriangularFuzzyNumber(-0.6, -0.5, -0.4);
      cfg.fuzzy.pin_mu = {0.0, 0.5, 1.0};
      cfg.fuzzy.pin_alpha = {0.0, 1.0};
      break;
    case ExperimentKind::kSinnetOscillator:
      cfg.loss.preset = losses::Preset::kSureness;
      cfg.train.epochs = 4000;
      cfg.ode.family = "damped-oscillator";
      cfg.ode.omega = 2.0;
      cfg.ode.zeta = 0.2;
      cfg.ode.x0 = 1.0;
      cfg.ode.xdot0 = 0.0;
      cfg.fuzzy.zeta = fuzzy::TriangularFuzzyNumber(0.15, 0.2, 0.25);
      cfg.prob.zeta = prob::Normal(0.2, 0.01);
      cfg.data.auto_count = 21;
      break;
    case ExperimentKind::kFinnCase1:
      cfg.loss.preset = losses::Preset::kFinn;
      cfg.train.epochs = 2000;
      cfg.train.collocation = {51, 0.0, 10.0, train::CollocationStrategy::kUniformGrid};
      cfg.data.t = {0.0, 2.5, 5.0, 7.5, 10.0};
      cfg.data.x = {8.0, 7.2, 6.3, 5.6, 5.0};
      cfg.rules.memberships = {
          {"small_t", MembershipSpec{"triangular", {0.0, 0.0, 5.0}}},
          {"large_t", MembershipSpec{"triangular", {5.0, 10.0, 10.0}}},
          {"large_x", MembershipSpec{"triangular", {6.0, 8.0, 10.0}}},
          {"medium_x", MembershipSpec{"triangular", {3.0, 5.0, 7.0}}},
      };
      cfg.rules.rules = {
          RuleSpec{{"small_t"}, "large_x"},
          RuleSpec{{"large_t"}, "medium_x"},
      };
      break;
    case ExperimentKind::kFinnDerivativeCase2:
      cfg.loss.preset = losses::Preset::kFinnDerivative;
      cfg.train.epochs = 2500;
      cfg.train.collocation = {51, 0.0, 10.0, train::CollocationStrategy::kUniformGrid};
      cfg.data.t = {0.0};
      cfg.data.x = {0.0};
      // gaussian consequents: the rate penalty keeps a usable gradient even
      // when the network's initial slope starts far from the rule cores
      cfg.rules.memberships = {
          {"near_zero_t", MembershipSpec{"triangular", {-3.0, 0.0, 3.0}}},
          {"about_ten_t", MembershipSpec{"triangular", {7.0, 10.0, 13.0}}},
          {"small_rate", MembershipSpec{"gaussian", {0.0, 0.5}}},
          {"approx_two", MembershipSpec{"gaussian", {2.0, 0.5}}},
      };
      cfg.rules.rules = {
          RuleSpec{{"near_zero_t"}, "small_rate"},
          RuleSpec{{"about_ten_t"}, "approx_two"},
      };
      break;
    case ExperimentKind::kFinnController:
      cfg.loss.preset = losses::Preset::kFinn;
      cfg.widths = {2, 16, 16, 1};
      cfg.train.adam.learning_rate = 1e-2;
      break;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// parser

namespace {

struct Entry {
  int line;
  std::string key;    // section-qualified: "train.epochs", "experiment", ...
  std::string value;
};

struct Parser {
  ExperimentConfig& cfg;
  std::vector<ParseError>& errors;

  void error(int line, std::string message) { errors.push_back({line, std::move(message)}); }

  std::vector<std::string> tokens(const Entry& e) {
    std::vector<std::string> out;
    std::istringstream in(e.value);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
  }

  bool one_double(const Entry& e, double& out) {
    bool ok = false;
    const double v = io::parse_double(e.value, &ok);
    if (!ok) error(e.line, e.key + ": expected a number, got '" + e.value + "'");
    else out = v;
    return ok;
  }

  bool one_int(const Entry& e, int& out, int min_value) {
    double v = 0;
    if (!one_double(e, v)) return false;
    if (v != std::floor(v)) {
      error(e.line, e.key + ": expected an integer");
      return false;
    }
    if (v < min_value) {
      error(e.line, e.key + ": must be at least " + std::to_string(min_value));
      return false;
    }
    out = static_cast<int>(v);
    return true;
  }

  bool one_positive(const Entry& e, double& out) {
    double v = 0;
    if (!one_double(e, v)) return false;
    if (!(v > 0.0)) {
      error(e.line, e.key + ": must be positive");
      return false;
    }
    out = v;
    return true;
  }

  bool one_bool(const Entry& e, bool& out) {
    if (e.value == "true") { out = true; return true; }
    if (e.value == "false") { out = false; return true; }
    error(e.line, e.key + ": expected true or false");
    return false;
  }

  bool double_list(const Entry& e, std::vector<double>& out) {
    std::vector<double> vals;
    for (const auto& tok : tokens(e)) {
      bool ok = false;
      const double v = io::parse_double(tok, &ok);
      if (!ok) {
        error(e.line, e.key + ": expected numbers, got '" + tok + "'");
        return false;
      }
      vals.push_back(v);
    }
    out = std::move(vals);
    return true;
  }

  bool triple(const Entry& e, std::optional<fuzzy::TriangularFuzzyNumber>& out) {
    std::vector<double> vals;
    if (!double_list(e, vals)) return false;
    if (vals.size() != 3) {
      error(e.line, e.key + ": expected three numbers (a b c)");
      return false;
    }
    try {
      out = fuzzy::TriangularFuzzyNumber(vals[0], vals[1], vals[2]);
    } catch (const std::invalid_argument& ex) {
      error(e.line, e.key + ": " + ex.what());
      return false;
    }
    return true;
  }

  bool normal(const Entry& e, std::optional<prob::Normal>& out) {
    std::vector<double> vals;
    if (!double_list(e, vals)) return false;
    if (vals.size() != 2) {
      error(e.line, e.key + ": expected two numbers (mean variance)");
      return false;
    }
    try {
      out = prob::Normal(vals[0], vals[1]);
    } catch (const std::invalid_argument& ex) {
      error(e.line, e.key + ": " + ex.what());
      return false;
    }
    return true;
  }

  bool unit_list(const Entry& e, std::vector<double>& out) {
    std::vector<double> vals;
    if (!double_list(e, vals)) return false;
    for (double v : vals) {
      if (v < 0.0 || v > 1.0) {
        error(e.line, e.key + ": values must lie in [0, 1]");
        return false;
      }
    }
    out = std::move(vals);
    return true;
  }

  void apply(const Entry& e) {
    const std::string& k = e.key;
    double d = 0;
    int i = 0;
    if (k == "experiment") return;  // consumed in the pre-pass
    if (k == "output") {
      if (e.value.empty()) error(e.line, "output: must not be empty");
      else cfg.output = e.value;
      return;
    }
    if (k == "net.widths") {
      std::vector<double> vals;
      if (!double_list(e, vals)) return;
      if (vals.size() < 2) { error(e.line, k + ": need at least two layers"); return; }
      std::vector<int> widths;
      for (double v : vals) {
        if (v != std::floor(v) || v < 1) { error(e.line, k + ": widths must be integers >= 1"); return; }
        widths.push_back(static_cast<int>(v));
      }
      cfg.widths = std::move(widths);
      return;
    }
    if (k == "train.epochs") { if (one_int(e, i, 1)) cfg.train.epochs = i; return; }
    if (k == "train.learning_rate") { if (one_positive(e, d)) cfg.train.adam.learning_rate = d; return; }
    if (k == "train.beta1") {
      if (one_double(e, d)) {
        if (d < 0.0 || d >= 1.0) error(e.line, k + ": must lie in [0, 1)");
        else cfg.train.adam.beta1 = d;
      }
      return;
    }
    if (k == "train.beta2") {
      if (one_double(e, d)) {
        if (d < 0.0 || d >= 1.0) error(e.line, k + ": must lie in [0, 1)");
        else cfg.train.adam.beta2 = d;
      }
      return;
    }
    if (k == "train.seed") {
      if (one_double(e, d)) {
        if (d != std::floor(d) || d < 0) error(e.line, k + ": must be a nonnegative integer");
        else cfg.train.seed = static_cast<std::uint64_t>(d);
      }
      return;
    }
    if (k == "train.collocation_count") { if (one_int(e, i, 1)) cfg.train.collocation.count = i; return; }
    if (k == "train.collocation_lo") { if (one_double(e, d)) cfg.train.collocation.lo = d; return; }
    if (k == "train.collocation_hi") { if (one_double(e, d)) cfg.train.collocation.hi = d; return; }
    if (k == "train.collocation_strategy") {
      if (e.value == "grid") cfg.train.collocation.strategy = train::CollocationStrategy::kUniformGrid;
      else if (e.value == "random") cfg.train.collocation.strategy = train::CollocationStrategy::kUniformRandom;
      else error(e.line, k + ": expected grid or random");
      return;
    }
    if (k == "train.early_stop") {
      if (one_double(e, d)) {
        if (d < 0.0) error(e.line, k + ": must be nonnegative");
        else cfg.train.early_stop_tolerance = d;
      }
      return;
    }
    if (k == "loss.preset") {
      if (auto p = losses::preset_from_name(e.value)) cfg.loss.preset = *p;
      else error(e.line, k + ": unknown preset '" + e.value + "'");
      return;
    }
    if (k == "loss.possibility_m") {
      if (one_double(e, d)) {
        if (!(d > 1.0)) error(e.line, k + ": must exceed 1");
        else cfg.loss.possibility_m = d;
      }
      return;
    }
    if (k == "loss.rule_m") {
      if (one_double(e, d)) {
        if (!(d >= 1.0)) error(e.line, k + ": must be at least 1");
        else cfg.loss.rule_m = d;
      }
      return;
    }
    if (k == "loss.fuzzy_ic") { one_bool(e, cfg.loss.fuzzy_ic); return; }
    if (k == "loss.sureness_per_point") { one_bool(e, cfg.loss.sureness_per_point); return; }
    if (k == "ode.family") {
      if (e.value == "exp-decay" || e.value == "damped-oscillator") cfg.ode.family = e.value;
      else error(e.line, k + ": expected exp-decay or damped-oscillator");
      return;
    }
    if (k == "ode.lambda") { if (one_double(e, d)) cfg.ode.lambda = d; return; }
    if (k == "ode.x0") { if (one_double(e, d)) cfg.ode.x0 = d; return; }
    if (k == "ode.omega") { if (one_positive(e, d)) cfg.ode.omega = d; return; }
    if (k == "ode.zeta") {
      if (one_double(e, d)) {
        if (!(d > 0.0 && d < 1.0)) error(e.line, k + ": must lie in (0, 1) (underdamped)");
        else cfg.ode.zeta = d;
      }
      return;
    }
    if (k == "ode.xdot0") { if (one_double(e, d)) cfg.ode.xdot0 = d; return; }
    if (k == "fuzzy.lambda") { triple(e, cfg.fuzzy.lambda); return; }
    if (k == "fuzzy.zeta") { triple(e, cfg.fuzzy.zeta); return; }
    if (k == "fuzzy.x0") { triple(e, cfg.fuzzy.x0); return; }
    if (k == "fuzzy.pin_mu") { unit_list(e, cfg.fuzzy.pin_mu); return; }
    if (k == "fuzzy.pin_alpha") { unit_list(e, cfg.fuzzy.pin_alpha); return; }
    if (k == "prob.lambda") { normal(e, cfg.prob.lambda); return; }
    if (k == "prob.zeta") { normal(e, cfg.prob.zeta); return; }
    if (k == "prob.mc_samples") { if (one_int(e, i, 1)) cfg.prob.mc_samples = i; return; }
    if (k == "data.t") { double_list(e, cfg.data.t); return; }
    if (k == "data.x") { double_list(e, cfg.data.x); return; }
    if (k == "data.auto_count") { if (one_int(e, i, 0)) cfg.data.auto_count = i; return; }
    if (k == "rules.tnorm") {
      if (e.value == "min") cfg.rules.tnorm = fuzzy::TNorm::kMin;
      else if (e.value == "product") cfg.rules.tnorm = fuzzy::TNorm::kProduct;
      else error(e.line, k + ": expected min or product");
      return;
    }
    if (k == "rules.snorm") {
      if (e.value == "max") cfg.rules.snorm = fuzzy::SNorm::kMax;
      else if (e.value == "bounded-sum") cfg.rules.snorm = fuzzy::SNorm::kBoundedSum;
      else error(e.line, k + ": expected max or bounded-sum");
      return;
    }
    if (k.starts_with("rules.mf.")) {
      const std::string name = k.substr(9);
      if (name.empty()) { error(e.line, "rules.mf.: missing membership name"); return; }
      auto toks = tokens(e);
      if (toks.empty()) { error(e.line, k + ": expected a shape and its parameters"); return; }
      MembershipSpec spec;
      spec.shape = toks.front();
      for (std::size_t j = 1; j < toks.size(); ++j) {
        bool ok = false;
        spec.params.push_back(io::parse_double(toks[j], &ok));
        if (!ok) { error(e.line, k + ": bad number '" + toks[j] + "'"); return; }
      }
      try {
        spec.build();  // shape/parameter validation
      } catch (const std::invalid_argument& ex) {
        error(e.line, k + ": " + ex.what());
        return;
      }
      std::erase_if(cfg.rules.memberships, [&](const auto& p) { return p.first == name; });
      cfg.rules.memberships.emplace_back(name, std::move(spec));
      return;
    }
    if (k.starts_with("rules.rule.")) {
      const std::string idx = k.substr(11);
      if (idx.empty() || !std::all_of(idx.begin(), idx.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        error(e.line, "rules.rule.<n>: rule index must be a number");
        return;
      }
      const auto arrow = e.value.find("->");
      if (arrow == std::string::npos) {
        error(e.line, k + ": expected '<antecedents> -> <consequent>'");
        return;
      }
      RuleSpec spec;
      for (auto& part : io::split(e.value.substr(0, arrow), '&')) {
        const auto name = io::trim(part);
        if (name.empty()) { error(e.line, k + ": empty antecedent name"); return; }
        spec.antecedents.emplace_back(name);
      }
      spec.consequent = std::string(io::trim(e.value.substr(arrow + 2)));
      if (spec.consequent.empty()) { error(e.line, k + ": empty consequent name"); return; }
      if (idx.size() > 3) { error(e.line, k + ": rule index out of range"); return; }
      const std::size_t pos = static_cast<std::size_t>(std::stoul(idx));
      if (pos < 1) { error(e.line, k + ": rule indices start at 1"); return; }
      if (cfg.rules.rules.size() < pos) cfg.rules.rules.resize(pos);
      cfg.rules.rules[pos - 1] = std::move(spec);
      return;
    }
    if (k == "controller.plant") {
      if (e.value == "first-order" || e.value == "second-order") cfg.controller.plant = e.value;
      else error(e.line, k + ": expected first-order or second-order");
      return;
    }
    if (k == "controller.gain") { if (one_positive(e, d)) cfg.controller.gain = d; return; }
    if (k == "controller.tau") { if (one_positive(e, d)) cfg.controller.tau = d; return; }
    if (k == "controller.omega") { if (one_positive(e, d)) cfg.controller.omega = d; return; }
    if (k == "controller.zeta") { if (one_positive(e, d)) cfg.controller.zeta = d; return; }
    if (k == "controller.dt") { if (one_positive(e, d)) cfg.controller.dt = d; return; }
    if (k == "controller.horizon") { if (one_int(e, i, 1)) cfg.controller.horizon = i; return; }
    if (k == "controller.steps_per_sample") { if (one_int(e, i, 1)) cfg.controller.steps_per_sample = i; return; }
    if (k == "controller.e_scale") { if (one_positive(e, d)) cfg.controller.e_scale = d; return; }
    if (k == "controller.edot_scale") { if (one_positive(e, d)) cfg.controller.edot_scale = d; return; }
    if (k == "controller.u_scale") { if (one_positive(e, d)) cfg.controller.u_scale = d; return; }
    if (k == "controller.divergence_bound") { if (one_positive(e, d)) cfg.controller.divergence_bound = d; return; }
    if (k == "controller.reference") {
      if (e.value == "step" || e.value == "sine" || e.value == "ramp") cfg.controller.reference = e.value;
      else error(e.line, k + ": expected step, sine or ramp");
      return;
    }
    if (k == "controller.ref_amplitude") { if (one_double(e, d)) cfg.controller.ref_amplitude = d; return; }
    if (k == "controller.ref_frequency") { if (one_positive(e, d)) cfg.controller.ref_frequency = d; return; }
    if (k == "controller.ref_slope") { if (one_double(e, d)) cfg.controller.ref_slope = d; return; }
    if (k == "oracle.rk4_h") { if (one_positive(e, d)) cfg.oracle.rk4_h = d; return; }
    if (k == "oracle.envelope_k") { if (one_int(e, i, 2)) cfg.oracle.envelope_k = i; return; }
    if (k == "oracle.envelope_inflate") {
      if (one_double(e, d)) {
        if (d < 0.0) error(e.line, k + ": must be nonnegative");
        else cfg.oracle.envelope_inflate = d;
      }
      return;
    }
    if (k == "oracle.verify_grid") { if (one_int(e, i, 2)) cfg.oracle.verify_grid = i; return; }
    if (k == "oracle.mc_n") { if (one_int(e, i, 100)) cfg.oracle.mc_n = i; return; }
    error(e.line, "unknown key '" + k + "'");
  }
};

bool known_section(std::string_view name) {
  for (const char* s : kSections)
    if (name == s) return true;
  return false;
}

void cross_validate(ExperimentConfig& cfg, std::vector<ParseError>& errors) {
  auto err = [&](std::string message) { errors.push_back({0, std::move(message)}); };
  if (!(cfg.train.collocation.lo < cfg.train.collocation.hi))
    err("train.collocation domain must satisfy lo < hi");
  if (cfg.data.t.size() != cfg.data.x.size())
    err("data.t and data.x must have the same length");
  if (!cfg.rules.rules.empty()) {
    std::size_t arity = 0;
    for (std::size_t r = 0; r < cfg.rules.rules.size(); ++r) {
      const RuleSpec& spec = cfg.rules.rules[r];
      if (spec.consequent.empty()) {
        err("rules.rule." + std::to_string(r + 1) + " is missing (rule indices must be contiguous)");
        continue;
      }
      if (arity == 0) arity = spec.antecedents.size();
      else if (spec.antecedents.size() != arity)
        err("rules disagree on the number of antecedents");
      for (const std::string& name : spec.antecedents)
        if (!cfg.rules.find(name)) err("rule references unknown membership '" + name + "'");
      if (!cfg.rules.find(spec.consequent))
        err("rule references unknown membership '" + spec.consequent + "'");
    }
  }
  const bool finn = cfg.loss.preset == losses::Preset::kFinn ||
                    cfg.loss.preset == losses::Preset::kFinnDerivative;
  if (finn && cfg.kind != ExperimentKind::kFinnController && cfg.rules.rules.empty())
    err("finn presets need at least one rule in [rules]");
  if (cfg.loss.preset == losses::Preset::kSureness) {
    const bool osc = cfg.ode.family == "damped-oscillator";
    if (osc && (!cfg.fuzzy.zeta || !cfg.prob.zeta))
      err("sureness preset on the oscillator needs fuzzy.zeta and prob.zeta");
    if (!osc && (!cfg.fuzzy.lambda || !cfg.prob.lambda))
      err("sureness preset on exp-decay needs fuzzy.lambda and prob.lambda");
  }
  if (cfg.loss.preset == losses::Preset::kPossibility) {
    const bool osc = cfg.ode.family == "damped-oscillator";
    if (osc && !cfg.fuzzy.zeta) err("possibility preset on the oscillator needs fuzzy.zeta");
    if (!osc && !cfg.fuzzy.lambda) err("possibility preset on exp-decay needs fuzzy.lambda");
  }
  if (cfg.loss.preset == losses::Preset::kProbability) {
    const bool osc = cfg.ode.family == "damped-oscillator";
    if (osc && !cfg.prob.zeta) err("probability preset on the oscillator needs prob.zeta");
    if (!osc && !cfg.prob.lambda) err("probability preset on exp-decay needs prob.lambda");
  }
  if (!cfg.fuzzy.pin_mu.empty() && cfg.fuzzy.pin_alpha.empty())
    err("fuzzy.pin_mu without fuzzy.pin_alpha");
  if (cfg.fuzzy.pin_mu.empty() && !cfg.fuzzy.pin_alpha.empty())
    err("fuzzy.pin_alpha without fuzzy.pin_mu");
  if (cfg.kind == ExperimentKind::kFinnController && cfg.widths.front() != 2)
    err("finn-controller needs a width-2 input layer (e, edot)");
  if (cfg.kind != ExperimentKind::kFinnController && cfg.widths.front() != 1)
    err("ODE experiments need a width-1 input layer (t)");
  if (cfg.widths.back() != 1) err("net.widths must end with one output");
}

}  // namespace

ParseResult parse_config(std::string_view text,
                         std::span<const std::pair<std::string, std::string>> overrides) {
  ParseResult result;
  std::vector<Entry> entries;
  std::string section;
  int line_no = 0;
  std::string experiment_value;
  int experiment_line = 0;

  std::istringstream in{std::string(text)};
  std::string raw;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line{raw};
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = io::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        result.errors.push_back({line_no, "unterminated section header"});
        continue;
      }
      const auto name = io::trim(line.substr(1, line.size() - 2));
      section = std::string(name);
      if (!known_section(name))
        result.errors.push_back({line_no, "unknown section '[" + section + "]'"});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      result.errors.push_back({line_no, "expected 'key = value'"});
      continue;
    }
    const auto key = io::trim(line.substr(0, eq));
    const auto value = io::trim(line.substr(eq + 1));
    if (key.empty()) {
      result.errors.push_back({line_no, "missing key before '='"});
      continue;
    }
    std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (auto [it, inserted] = seen.emplace(full, line_no); !inserted) {
      result.errors.push_back({line_no, "duplicated key '" + full + "' (first set on line " +
                                            std::to_string(it->second) + ")"});
      continue;
    }
    if (full == "experiment") {
      experiment_value = std::string(value);
      experiment_line = line_no;
      continue;
    }
    entries.push_back(Entry{line_no, std::move(full), std::string(value)});
  }

  if (experiment_value.empty()) {
    result.errors.push_back({0, "missing required key 'experiment'"});
    return result;
  }
  const auto kind = experiment_from_name(experiment_value);
  if (!kind) {
    std::string valid;
    for (ExperimentKind k : kAll) {
      if (!valid.empty()) valid += ", ";
      valid += experiment_name(k);
    }
    result.errors.push_back({experiment_line, "unknown experiment '" + experiment_value +
                                                  "' (valid: " + valid + ")"});
    return result;
  }

  ExperimentConfig cfg = default_config(*kind);
  Parser parser{cfg, result.errors};
  for (const Entry& e : entries) parser.apply(e);
  for (const auto& [key, value] : overrides) parser.apply(Entry{0, key, value});
  cross_validate(cfg, result.errors);

  if (result.errors.empty()) result.config = std::move(cfg);
  return result;
}

// ---------------------------------------------------------------------------
// serializer

namespace {

std::string fmt(double v) { return io::format_double(v); }

std::string fmt_list(std::span<const double> vs) {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ' ';
    out += fmt(vs[i]);
  }
  return out;
}

}  // namespace

std::string serialize(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "experiment = " << experiment_name(cfg.kind) << "\n";
  out << "output = " << cfg.output << "\n";

  out << "\n[net]\n";
  out << "widths =";
  for (int w : cfg.widths) out << " " << w;
  out << "\n";

  out << "\n[train]\n";
  out << "epochs = " << cfg.train.epochs << "\n";
  out << "learning_rate = " << fmt(cfg.train.adam.learning_rate) << "\n";
  out << "beta1 = " << fmt(cfg.train.adam.beta1) << "\n";
  out << "beta2 = " << fmt(cfg.train.adam.beta2) << "\n";
  out << "seed = " << cfg.train.seed << "\n";
  out << "collocation_count = " << cfg.train.collocation.count << "\n";
  out << "collocation_lo = " << fmt(cfg.train.collocation.lo) << "\n";
  out << "collocation_hi = " << fmt(cfg.train.collocation.hi) << "\n";
  out << "collocation_strategy = "
      << (cfg.train.collocation.strategy == train::CollocationStrategy::kUniformGrid ? "grid"
                                                                                     : "random")
      << "\n";
  out << "early_stop = " << fmt(cfg.train.early_stop_tolerance) << "\n";

  out << "\n[loss]\n";
  out << "preset = " << losses::preset_name(cfg.loss.preset) << "\n";
  out << "possibility_m = " << fmt(cfg.loss.possibility_m) << "\n";
  out << "rule_m = " << fmt(cfg.loss.rule_m) << "\n";
  out << "fuzzy_ic = " << (cfg.loss.fuzzy_ic ? "true" : "false") << "\n";
  out << "sureness_per_point = " << (cfg.loss.sureness_per_point ? "true" : "false") << "\n";

  out << "\n[ode]\n";
  out << "family = " << cfg.ode.family << "\n";
  out << "lambda = " << fmt(cfg.ode.lambda) << "\n";
  out << "x0 = " << fmt(cfg.ode.x0) << "\n";
  out << "omega = " << fmt(cfg.ode.omega) << "\n";
  out << "zeta = " << fmt(cfg.ode.zeta) << "\n";
  out << "xdot0 = " << fmt(cfg.ode.xdot0) << "\n";

  out << "\n[fuzzy]\n";
  if (cfg.fuzzy.lambda)
    out << "lambda = " << fmt(cfg.fuzzy.lambda->a) << " " << fmt(cfg.fuzzy.lambda->b) << " "
        << fmt(cfg.fuzzy.lambda->c) << "\n";
  if (cfg.fuzzy.zeta)
    out << "zeta = " << fmt(cfg.fuzzy.zeta->a) << " " << fmt(cfg.fuzzy.zeta->b) << " "
        << fmt(cfg.fuzzy.zeta->c) << "\n";
  if (cfg.fuzzy.x0)
    out << "x0 = " << fmt(cfg.fuzzy.x0->a) << " " << fmt(cfg.fuzzy.x0->b) << " "
        << fmt(cfg.fuzzy.x0->c) << "\n";
  if (!cfg.fuzzy.pin_mu.empty()) out << "pin_mu = " << fmt_list(cfg.fuzzy.pin_mu) << "\n";
  if (!cfg.fuzzy.pin_alpha.empty()) out << "pin_alpha = " << fmt_list(cfg.fuzzy.pin_alpha) << "\n";

  out << "\n[prob]\n";
  if (cfg.prob.lambda)
    out << "lambda = " << fmt(cfg.prob.lambda->mean) << " " << fmt(cfg.prob.lambda->variance)
        << "\n";
  if (cfg.prob.zeta)
    out << "zeta = " << fmt(cfg.prob.zeta->mean) << " " << fmt(cfg.prob.zeta->variance) << "\n";
  out << "mc_samples = " << cfg.prob.mc_samples << "\n";

  out << "\n[data]\n";
  if (!cfg.data.t.empty()) {
    out << "t = " << fmt_list(cfg.data.t) << "\n";
    out << "x = " << fmt_list(cfg.data.x) << "\n";
  }
  out << "auto_count = " << cfg.data.auto_count << "\n";

  out << "\n[rules]\n";
  out << "tnorm = " << (cfg.rules.tnorm == fuzzy::TNorm::kMin ? "min" : "product") << "\n";
  out << "snorm = " << (cfg.rules.snorm == fuzzy::SNorm::kMax ? "max" : "bounded-sum") << "\n";
  for (const auto& [name, spec] : cfg.rules.memberships)
    out << "mf." << name << " = " << spec.shape << " " << fmt_list(spec.params) << "\n";
  for (std::size_t r = 0; r < cfg.rules.rules.size(); ++r) {
    out << "rule." << (r + 1) << " = ";
    for (std::size_t a = 0; a < cfg.rules.rules[r].antecedents.size(); ++a) {
      if (a) out << " & ";
      out << cfg.rules.rules[r].antecedents[a];
    }
    out << " -> " << cfg.rules.rules[r].consequent << "\n";
  }

  out << "\n[controller]\n";
  out << "plant = " << cfg.controller.plant << "\n";
  out << "gain = " << fmt(cfg.controller.gain) << "\n";
  out << "tau = " << fmt(cfg.controller.tau) << "\n";
  out << "omega = " << fmt(cfg.controller.omega) << "\n";
  out << "zeta = " << fmt(cfg.controller.zeta) << "\n";
  out << "dt = " << fmt(cfg.controller.dt) << "\n";
  out << "horizon = " << cfg.controller.horizon << "\n";
  out << "steps_per_sample = " << cfg.controller.steps_per_sample << "\n";
  out << "e_scale = " << fmt(cfg.controller.e_scale) << "\n";
  out << "edot_scale = " << fmt(cfg.controller.edot_scale) << "\n";
  out << "u_scale = " << fmt(cfg.controller.u_scale) << "\n";
  out << "divergence_bound = " << fmt(cfg.controller.divergence_bound) << "\n";
  out << "reference = " << cfg.controller.reference << "\n";
  out << "ref_amplitude = " << fmt(cfg.controller.ref_amplitude) << "\n";
  out << "ref_frequency = " << fmt(cfg.controller.ref_frequency) << "\n";
  out << "ref_slope = " << fmt(cfg.controller.ref_slope) << "\n";

  out << "\n[oracle]\n";
  out << "rk4_h = " << fmt(cfg.oracle.rk4_h) << "\n";
  out << "envelope_k = " << cfg.oracle.envelope_k << "\n";
  out << "envelope_inflate = " << fmt(cfg.oracle.envelope_inflate) << "\n";
  out << "verify_grid = " << cfg.oracle.verify_grid << "\n";
  out << "mc_n = " << cfg.oracle.mc_n << "\n";
  return out.str();
}

}  // namespace perceptlab::config
