#include "perceptlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "perceptlab/io.hpp"
#include "perceptlab/losses.hpp"
#include "perceptlab/prob.hpp"

namespace perceptlab::experiments {

using autodiff::Scalar;
using config::ExperimentConfig;
using config::ExperimentKind;

namespace {

constexpr ExperimentInfo kExperiments[] = {
    {"pinn-decay",
     "Crisp residual training on the decay problem; verified against the closed form.",
     "dx/dt = -0.5 x, x(0) = 5"},
    {"fcinn-decay",
     "Granular residual training at pinned (mu, alpha) HMF coordinates of a fuzzy decay rate; "
     "verified against the alpha-cut envelope.",
     "dx/dt = lambda x, lambda ~ (-0.6, -0.5, -0.4), x(0) = 5"},
    {"sinnet-oscillator",
     "Sureness training: possibility and probability precisiations of the damping ratio fused "
     "into one consensus loss.",
     "x'' + 2 zeta omega x' + omega^2 x = 0, zeta ~ (0.15, 0.2, 0.25) and N(0.2, 0.01)"},
    {"finn-case1",
     "State rules as soft constraints next to sparse data.",
     "if t is small then x is large; if t is large then x is medium"},
    {"finn-derivative-case2",
     "Perception-based derivative rules shaping dx/dt.",
     "if t is near zero then x' is small; if t is about 10 then x' is approximately 2"},
    {"finn-controller",
     "Closed-loop controller trained online from the 3x3 (e, e') -> u rule table, starting "
     "untrained.",
     "u = net(e, e'), loss M (1 - R(e, e', u))^2"},
};

// report thresholds, pinned here rather than in configs
constexpr double kDecayMaxErr = 5e-2;
constexpr double kSurenessLossMax = 0.1;
constexpr double kCoreRestrictionMin = 0.7;
constexpr double kRuleLossRatioMax = 0.9;
constexpr double kTrackingRatioMax = 0.2;

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  for (int i = 0; i < n; ++i)
    out.push_back(lo + (hi - lo) * (static_cast<double>(i) / (n - 1)));
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

bool check_passes(double measured, std::string_view op, double threshold) {
  if (op == "lt") return measured < threshold;
  if (op == "le") return measured <= threshold;
  if (op == "ge") return measured >= threshold;
  throw std::logic_error("unknown check op");
}

CheckResult make_check(std::string name, double measured, std::string op, double threshold) {
  CheckResult c;
  c.name = std::move(name);
  c.measured = measured;
  c.threshold = threshold;
  c.op = std::move(op);
  c.pass = check_passes(measured, c.op, threshold);
  return c;
}

}  // namespace

std::span<const ExperimentInfo> list_experiments() { return kExperiments; }

const ExperimentInfo* find_experiment(std::string_view name) {
  for (const ExperimentInfo& e : kExperiments)
    if (e.name == name) return &e;
  return nullptr;
}

std::string closest_experiment(std::string_view name) {
  std::size_t best = static_cast<std::size_t>(-1);
  std::string_view pick;
  for (const ExperimentInfo& e : kExperiments) {
    const std::size_t d = levenshtein(name, e.name);
    if (d < best) {
      best = d;
      pick = e.name;
    }
  }
  return std::string(pick);
}

bool VerificationReport::overall() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string report_to_text(const VerificationReport& report) {
  std::ostringstream out;
  out << "experiment = " << report.experiment << "\n";
  for (const CheckResult& c : report.checks) {
    out << "check." << c.name << ".measured = " << io::format_double(c.measured) << "\n";
    out << "check." << c.name << ".threshold = " << io::format_double(c.threshold) << "\n";
    out << "check." << c.name << ".op = " << c.op << "\n";
    out << "check." << c.name << ".pass = " << (c.pass ? "true" : "false") << "\n";
  }
  out << "overall = " << (report.overall() ? "pass" : "fail") << "\n";
  return out.str();
}

VerificationReport report_from_text(std::string_view text) {
  VerificationReport report;
  std::istringstream in{std::string(text)};
  std::string line;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key{io::trim(line.substr(0, eq))};
    const std::string value{io::trim(line.substr(eq + 1))};
    if (key == "experiment") {
      report.experiment = value;
      continue;
    }
    if (key.rfind("check.", 0) != 0) continue;
    const auto rest = key.substr(6);
    const auto dot = rest.rfind('.');
    if (dot == std::string::npos) continue;
    const std::string name = rest.substr(0, dot);
    const std::string field = rest.substr(dot + 1);
    auto [it, inserted] = index.emplace(name, report.checks.size());
    if (inserted) {
      report.checks.emplace_back();
      report.checks.back().name = name;
    }
    CheckResult& c = report.checks[it->second];
    if (field == "measured") c.measured = io::parse_double(value);
    else if (field == "threshold") c.threshold = io::parse_double(value);
    else if (field == "op") c.op = value;
    else if (field == "pass") c.pass = value == "true";
  }
  return report;
}

// ---------------------------------------------------------------------------
// training setup

oracle::Family modal_family(const ExperimentConfig& cfg) {
  if (cfg.ode.family == "damped-oscillator")
    return oracle::DampedOscillator(cfg.ode.zeta, cfg.ode.omega, cfg.ode.x0, cfg.ode.xdot0);
  return oracle::ExpDecay{cfg.ode.lambda, cfg.ode.x0};
}

void TrainingSetup::ensure_batch(bool second_order) {
  if (batch.rewind_count == tape.rewind_count()) return;
  batch.x.clear();
  batch.xdot.clear();
  batch.xddot.clear();
  for (double ti : collocation) {
    const Scalar t = tape.leaf(ti);
    const Scalar x = net->forward(t);
    const Scalar xd = autodiff::derivative(x, t);
    batch.x.push_back(x);
    batch.xdot.push_back(xd);
    if (second_order) batch.xddot.push_back(autodiff::derivative(xd, t));
  }
  batch.rewind_count = tape.rewind_count();
  batch.second_order = second_order;
}

train::FitResult TrainingSetup::fit() {
  return train::fit(tape, mark, loss, trainables, cfg.train, probes);
}

std::vector<double> TrainingSetup::evaluate(std::span<const double> ts) {
  tape.rewind(mark);
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back(net->forward(Scalar(t)).value());
  tape.rewind(mark);
  return out;
}

double TrainingSetup::evaluate_derivative(double tv) {
  tape.rewind(mark);
  const Scalar t = tape.leaf(tv);
  const Scalar x = net->forward(t);
  const double v = autodiff::derivative(x, t).value();
  tape.rewind(mark);
  return v;
}

namespace {

bool uses_granule(losses::Preset p) {
  return p == losses::Preset::kPossibility || p == losses::Preset::kSureness;
}

}  // namespace

std::unique_ptr<TrainingSetup> make_setup(const ExperimentConfig& cfg,
                                          std::optional<PinnedGranule> pin) {
  auto setup = std::make_unique<TrainingSetup>();
  TrainingSetup* s = setup.get();
  s->cfg = cfg;
  const bool osc = cfg.ode.family == "damped-oscillator";
  const losses::Preset preset = cfg.loss.preset;

  s->collocation = train::sample_collocation(cfg.train.collocation, cfg.train.seed);
  if (cfg.data.auto_count > 0) {
    s->data_t = linspace(cfg.train.collocation.lo, cfg.train.collocation.hi, cfg.data.auto_count);
    const auto family = modal_family(cfg);
    for (double t : s->data_t) s->data_x.push_back(oracle::analytic(family, t));
  } else {
    s->data_t = cfg.data.t;
    s->data_x = cfg.data.x;
  }

  s->net = network::Mlp::init(s->tape, cfg.widths, cfg.train.seed);
  s->trainables = s->net->parameters();

  if (uses_granule(preset)) {
    const fuzzy::TriangularFuzzyNumber* quantity = osc
        ? (cfg.fuzzy.zeta ? &*cfg.fuzzy.zeta : nullptr)
        : (cfg.fuzzy.lambda ? &*cfg.fuzzy.lambda : nullptr);
    if (!quantity)
      throw std::invalid_argument("granular preset without a fuzzy parameter for the family");
    if (pin) {
      s->mu = network::ConstrainedParam::pinned(pin->mu);
      auto alpha = network::ConstrainedParam::pinned(pin->alpha);
      if (osc) s->alpha_zeta = alpha; else s->alpha_lambda = alpha;
    } else {
      s->mu = network::ConstrainedParam::bounded(s->tape, 0.0, 1.0, 0.0);
      s->trainables.push_back(s->mu->raw());
      auto alpha = network::ConstrainedParam::bounded(s->tape, 0.0, 1.0, 0.0);
      s->trainables.push_back(alpha.raw());
      if (osc) s->alpha_zeta = alpha; else s->alpha_lambda = alpha;
      if (cfg.loss.fuzzy_ic && cfg.fuzzy.x0) {
        s->alpha_x0 = network::ConstrainedParam::bounded(s->tape, 0.0, 1.0, 0.0);
        s->trainables.push_back(s->alpha_x0->raw());
      }
    }
  }

  if (preset == losses::Preset::kProbability) {
    const prob::Normal* dist = osc ? (cfg.prob.zeta ? &*cfg.prob.zeta : nullptr)
                                   : (cfg.prob.lambda ? &*cfg.prob.lambda : nullptr);
    if (!dist) throw std::invalid_argument("probability preset without a random parameter");
    s->mc_samples = prob::sample(*dist, cfg.train.seed * 0x9e3779b9u + 17u,
                                 static_cast<std::size_t>(cfg.prob.mc_samples));
  }

  if (!cfg.rules.rules.empty()) s->rules = cfg.rules.build();

  s->mark = s->tape.mark();

  // probes
  if (s->mu) {
    s->probes.push_back({"mu", [s] { return s->mu->current_value(); }});
    const network::ConstrainedParam* alpha =
        osc ? (s->alpha_zeta ? &*s->alpha_zeta : nullptr)
            : (s->alpha_lambda ? &*s->alpha_lambda : nullptr);
    if (alpha) {
      s->probes.push_back({osc ? "alpha_zeta" : "alpha_lambda",
                           [alpha] { return alpha->current_value(); }});
      const auto tri = osc ? *cfg.fuzzy.zeta : *cfg.fuzzy.lambda;
      s->probes.push_back({osc ? "zeta_granule" : "lambda_granule", [s, alpha, tri] {
                             return fuzzy::hmf(
                                 tri, fuzzy::Granule(s->mu->current_value(),
                                                     alpha->current_value()));
                           }});
    }
  }

  // ---- loss terms ----
  const double omega = cfg.ode.omega;
  const double t0 = cfg.train.collocation.lo;

  if (!s->data_t.empty()) {
    s->loss.add("data", 1.0, [s] {
      std::vector<Scalar> preds;
      preds.reserve(s->data_t.size());
      for (double t : s->data_t) preds.push_back(s->net->forward(Scalar(t)));
      return losses::data_loss(preds, s->data_x);
    });
  }

  auto add_ic_terms = [&] {
    const bool granular_ic = uses_granule(preset) && cfg.loss.fuzzy_ic && cfg.fuzzy.x0.has_value();
    if (granular_ic) {
      const auto tri = *cfg.fuzzy.x0;
      const double m = cfg.loss.possibility_m;
      s->loss.add("ic", 1.0, [s, tri, t0, m] {
        const Scalar alpha =
            s->alpha_x0 ? s->alpha_x0->value()
                        : (s->alpha_lambda ? s->alpha_lambda->value() : s->alpha_zeta->value());
        const Scalar target = fuzzy::hmf(tri, s->mu->value(), alpha);
        const Scalar e = s->net->forward(Scalar(t0)) - target;
        return losses::possibility_factor(s->mu->value(), m) * (e * e);
      });
    } else {
      const double x0 = cfg.ode.x0;
      s->loss.add("ic", 1.0,
                  [s, t0, x0] { return losses::ic_loss(s->net->forward(Scalar(t0)), x0); });
    }
    if (osc) {
      const double xdot0 = cfg.ode.xdot0;
      s->loss.add("ic_rate", 1.0, [s, t0, xdot0] {
        const Scalar t = s->tape.leaf(t0);
        const Scalar x = s->net->forward(t);
        const Scalar e = autodiff::derivative(x, t) - xdot0;
        return e * e;
      });
    }
  };

  // residual over the cached batch with the family parameter supplied per call
  auto residual_mean = [s, osc, omega](const std::function<Scalar()>& param) {
    s->ensure_batch(osc);
    const Scalar p = param();
    std::vector<Scalar> rs;
    rs.reserve(s->collocation.size());
    for (std::size_t i = 0; i < s->collocation.size(); ++i) {
      if (osc) {
        rs.push_back(s->batch.xddot[i] + (p * (2.0 * omega)) * s->batch.xdot[i] +
                     (omega * omega) * s->batch.x[i]);
      } else {
        rs.push_back(s->batch.xdot[i] - p * s->batch.x[i]);
      }
    }
    return losses::mean_sq(rs);
  };

  switch (preset) {
    case losses::Preset::kSingular: {
      add_ic_terms();
      const double p = osc ? cfg.ode.zeta : cfg.ode.lambda;
      s->loss.add("residual", 1.0,
                  [residual_mean, p] { return residual_mean([p] { return Scalar(p); }); });
      break;
    }
    case losses::Preset::kPossibility:
    case losses::Preset::kSureness: {
      add_ic_terms();
      const auto tri = osc ? *cfg.fuzzy.zeta : *cfg.fuzzy.lambda;
      const double m = cfg.loss.possibility_m;
      auto granule = [s, tri, osc]() {
        const Scalar alpha = osc ? s->alpha_zeta->value() : s->alpha_lambda->value();
        return fuzzy::hmf(tri, s->mu->value(), alpha);
      };
      s->loss.add("residual_granular", 1.0, [s, residual_mean, granule, m] {
        return losses::possibility_factor(s->mu->value(), m) * residual_mean(granule);
      });
      if (preset == losses::Preset::kSureness) {
        const prob::Normal dist = osc ? *cfg.prob.zeta : *cfg.prob.lambda;
        const bool per_point = cfg.loss.sureness_per_point;
        s->loss.add("sureness", 1.0, [s, dist, osc, omega, per_point] {
          s->ensure_batch(osc);
          const std::size_t n = s->collocation.size();
          Scalar acc(0.0);
          for (std::size_t i = 0; i < n; ++i) {
            Scalar offset(0.0), slope(0.0);
            if (osc) {
              offset = s->batch.xddot[i] + (omega * omega) * s->batch.x[i];
              slope = s->batch.xdot[i] * (2.0 * omega);
            } else {
              offset = s->batch.xdot[i];
              slope = s->batch.x[i] * -1.0;
            }
            const Scalar lik = losses::zero_residual_likelihood(offset, slope, dist);
            if (per_point) {
              acc = acc + losses::sureness_loss(losses::sureness(s->mu->value(), lik));
            } else {
              acc = acc + lik;
            }
          }
          if (per_point) return acc / static_cast<double>(n);
          const Scalar mean_lik = acc / static_cast<double>(n);
          return losses::sureness_loss(losses::sureness(s->mu->value(), mean_lik));
        });
      }
      break;
    }
    case losses::Preset::kProbability: {
      add_ic_terms();
      s->loss.add("residual_mc", 1.0, [s, residual_mean] {
        Scalar acc(0.0);
        for (double sample : s->mc_samples)
          acc = acc + residual_mean([sample] { return Scalar(sample); });
        return acc / static_cast<double>(s->mc_samples.size());
      });
      break;
    }
    case losses::Preset::kFinn: {
      if (!s->rules) throw std::invalid_argument("finn preset without rules");
      const double m = cfg.loss.rule_m;
      s->loss.add("rules", 1.0, [s, m] {
        return losses::state_rule_loss(*s->net, *s->rules, s->collocation, m);
      });
      break;
    }
    case losses::Preset::kFinnDerivative: {
      if (!s->rules) throw std::invalid_argument("finn-derivative preset without rules");
      const double m = cfg.loss.rule_m;
      s->loss.add("rules_derivative", 1.0, [s, m] {
        return losses::derivative_rule_loss(*s->net, *s->rules, s->collocation, m);
      });
      break;
    }
  }
  return setup;
}

// ---------------------------------------------------------------------------
// artifact files

namespace {

io::CsvTable telemetry_table(const train::FitResult& fr) {
  io::CsvTable t;
  t.header.push_back("epoch");
  for (const auto& n : fr.telemetry.term_names) t.header.push_back(n);
  t.header.push_back("total");
  for (const auto& n : fr.telemetry.probe_names) t.header.push_back(n);
  for (const auto& rec : fr.telemetry.records) {
    std::vector<double> row;
    row.push_back(rec.epoch);
    for (double v : rec.term_values) row.push_back(v);
    row.push_back(rec.total);
    for (double v : rec.probe_values) row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_trajectory(const std::filesystem::path& file, std::span<const double> ts,
                      std::span<const double> xs) {
  io::CsvTable t;
  t.header = {"t", "x"};
  for (std::size_t i = 0; i < ts.size(); ++i) t.rows.push_back({ts[i], xs[i]});
  io::write_file_atomic(file, io::to_csv(t));
}

void write_snapshot(const std::filesystem::path& file, const TrainingSetup& s) {
  std::ostringstream out;
  out << "perceptlab-snapshot,v1\n";
  out << "widths";
  for (int w : s.net->widths()) out << "," << w;
  out << "\n";
  for (double v : s.net->snapshot()) out << "w," << io::format_double(v) << "\n";
  auto param = [&](const char* name, const std::optional<network::ConstrainedParam>& p) {
    if (p && p->learnable()) out << "param," << name << "," << io::format_double(p->raw_value()) << "\n";
  };
  param("mu_raw", s.mu);
  param("alpha_lambda_raw", s.alpha_lambda);
  param("alpha_zeta_raw", s.alpha_zeta);
  param("alpha_x0_raw", s.alpha_x0);
  io::write_file_atomic(file, out.str());
}

struct Snapshot {
  std::vector<int> widths;
  std::vector<double> weights;
  std::vector<std::pair<std::string, double>> params;
};

Snapshot read_snapshot(const std::filesystem::path& file) {
  Snapshot snap;
  std::istringstream in(io::read_file(file));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = io::split(line, ',');
    if (line_no == 1) {
      if (cells.empty() || cells[0] != "perceptlab-snapshot" || cells.size() < 2 || cells[1] != "v1")
        throw std::runtime_error("unrecognized snapshot header in " + file.string());
      continue;
    }
    if (cells[0] == "widths") {
      for (std::size_t i = 1; i < cells.size(); ++i)
        snap.widths.push_back(static_cast<int>(io::parse_double(cells[i])));
    } else if (cells[0] == "w" && cells.size() == 2) {
      snap.weights.push_back(io::parse_double(cells[1]));
    } else if (cells[0] == "param" && cells.size() == 3) {
      snap.params.emplace_back(cells[1], io::parse_double(cells[2]));
    } else {
      throw std::runtime_error("bad snapshot line " + std::to_string(line_no) + " in " +
                               file.string());
    }
  }
  if (snap.widths.empty()) throw std::runtime_error("snapshot missing widths: " + file.string());
  return snap;
}

/// Network reloaded from a snapshot, ready for evaluation.
struct LoadedNet {
  autodiff::Tape tape;
  std::optional<network::Mlp> net;
  std::size_t mark = 0;

  double value(double tv) {
    tape.rewind(mark);
    const double v = net->forward(Scalar(tv)).value();
    tape.rewind(mark);
    return v;
  }
  double deriv(double tv) {
    tape.rewind(mark);
    const Scalar t = tape.leaf(tv);
    const Scalar x = net->forward(t);
    const double v = autodiff::derivative(x, t).value();
    tape.rewind(mark);
    return v;
  }
};

std::unique_ptr<LoadedNet> load_net(const std::filesystem::path& snapshot_file) {
  const Snapshot snap = read_snapshot(snapshot_file);
  auto loaded = std::make_unique<LoadedNet>();
  loaded->net = network::Mlp::init(loaded->tape, snap.widths, 0);
  loaded->net->restore(snap.weights);
  loaded->mark = loaded->tape.mark();
  return loaded;
}

std::string granule_suffix(double mu, double alpha) {
  return "mu" + io::format_double(mu) + "_alpha" + io::format_double(alpha);
}

// ---------------------------------------------------------------------------
// per-experiment checks, shared between run() and verify()

CheckResult decay_trajectory_check(const ExperimentConfig& cfg, std::span<const double> ts,
                                   std::span<const double> xs) {
  const auto family = modal_family(cfg);
  double max_err = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i)
    max_err = std::max(max_err, std::fabs(xs[i] - oracle::analytic(family, ts[i])));
  return make_check("max_abs_error_vs_analytic", max_err, "lt", kDecayMaxErr);
}

struct NamedTrajectory {
  double mu;
  double alpha;
  std::vector<double> t, x;
};

std::vector<CheckResult> envelope_checks(const ExperimentConfig& cfg,
                                         std::span<const NamedTrajectory> trajectories,
                                         std::vector<std::pair<double, oracle::Envelope>>* out_envelopes) {
  if (!cfg.fuzzy.lambda) throw std::runtime_error("fcinn-decay needs fuzzy.lambda");
  const oracle::FuzzyParam fp[] = {{"lambda", *cfg.fuzzy.lambda}};
  const double inflate = cfg.oracle.envelope_inflate;

  std::size_t total = 0, inside = 0;
  for (double mu : cfg.fuzzy.pin_mu) {
    const NamedTrajectory* first = nullptr;
    for (const auto& tr : trajectories)
      if (tr.mu == mu) {
        first = &tr;
        break;
      }
    if (!first) continue;
    const auto env = oracle::alpha_cut_envelope(modal_family(cfg), fp, mu, first->t,
                                                cfg.oracle.envelope_k, cfg.oracle.rk4_h);
    for (const auto& tr : trajectories) {
      if (tr.mu != mu) continue;
      for (std::size_t i = 0; i < tr.t.size(); ++i) {
        ++total;
        if (tr.x[i] >= env.lo[i] - inflate && tr.x[i] <= env.hi[i] + inflate) ++inside;
      }
    }
    if (out_envelopes) out_envelopes->emplace_back(mu, env);
  }
  const double ratio = total == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(total);
  return {make_check("envelope_containment_ratio", ratio, "ge", 1.0)};
}

std::vector<CheckResult> finn_core_checks(const ExperimentConfig& cfg,
                                          const std::function<double(double)>& output_at) {
  const fuzzy::RuleSet rs = cfg.rules.build();
  std::vector<CheckResult> checks;
  for (std::size_t r = 0; r < cfg.rules.rules.size(); ++r) {
    const auto& spec = cfg.rules.rules[r];
    const config::MembershipSpec* ant = cfg.rules.find(spec.antecedents.front());
    double core = 0.0;
    if (ant->shape == "triangular") core = ant->params[1];
    else if (ant->shape == "trapezoidal") core = 0.5 * (ant->params[1] + ant->params[2]);
    else core = ant->params[0];
    const double in[] = {core};
    const double restriction = fuzzy::restriction(rs, in, output_at(core));
    checks.push_back(make_check("rule" + std::to_string(r + 1) + "_core_restriction", restriction,
                                "ge", kCoreRestrictionMin));
  }
  return checks;
}

CheckResult rule_ratio_check(const io::CsvTable& telemetry, const std::string& column) {
  const int col = telemetry.column(column);
  if (col < 0 || telemetry.rows.empty())
    throw std::runtime_error("telemetry is missing the '" + column + "' column");
  const double initial = telemetry.rows.front()[static_cast<std::size_t>(col)];
  const double final_v = telemetry.rows.back()[static_cast<std::size_t>(col)];
  const double ratio = initial == 0.0 ? 0.0 : final_v / initial;
  return make_check("rule_loss_ratio", ratio, "le", kRuleLossRatioMax);
}

double tail_mean_abs_error(const io::CsvTable& loop) {
  const int col = loop.column("error");
  if (col < 0 || loop.rows.empty()) throw std::runtime_error("loop telemetry is missing 'error'");
  const std::size_t n = loop.rows.size();
  const std::size_t start = n - n / 4;
  double acc = 0.0;
  for (std::size_t i = start; i < n; ++i) acc += std::fabs(loop.rows[i][static_cast<std::size_t>(col)]);
  return acc / static_cast<double>(n - start);
}

controlsim::Plant plant_from(const ExperimentConfig& cfg) {
  if (cfg.controller.plant == "second-order")
    return controlsim::Plant::second_order(cfg.controller.omega, cfg.controller.zeta,
                                           cfg.controller.dt);
  return controlsim::Plant::first_order(cfg.controller.gain, cfg.controller.tau,
                                        cfg.controller.dt);
}

controlsim::Reference reference_from(const ExperimentConfig& cfg) {
  controlsim::Reference ref;
  if (cfg.controller.reference == "sine") ref.kind = controlsim::Reference::Kind::kSine;
  else if (cfg.controller.reference == "ramp") ref.kind = controlsim::Reference::Kind::kRamp;
  else ref.kind = controlsim::Reference::Kind::kStep;
  ref.amplitude = cfg.controller.ref_amplitude;
  ref.frequency = cfg.controller.ref_frequency;
  ref.slope = cfg.controller.ref_slope;
  return ref;
}

io::CsvTable loop_table(std::span<const controlsim::LoopRecord> records) {
  io::CsvTable t;
  t.header = {"time", "reference", "output", "error", "edot", "u", "rule_loss"};
  for (const auto& r : records)
    t.rows.push_back({r.time, r.reference, r.output, r.error, r.error_rate, r.control, r.rule_loss});
  return t;
}

CheckResult tracking_check(const io::CsvTable& loop, const io::CsvTable& baseline) {
  const double trained = tail_mean_abs_error(loop);
  const double base = tail_mean_abs_error(baseline);
  const double ratio = base == 0.0 ? (trained == 0.0 ? 0.0 : 1e300) : trained / base;
  return make_check("tracking_error_ratio", ratio, "le", kTrackingRatioMax);
}

}  // namespace

// ---------------------------------------------------------------------------
// run

namespace {

RunArtifact run_controller(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  autodiff::Tape tape;
  network::Mlp controller = network::Mlp::init(tape, cfg.widths, cfg.train.seed);
  const std::size_t mark = tape.mark();

  const fuzzy::RuleSet rules =
      cfg.rules.rules.empty() ? controlsim::rule_table() : cfg.rules.build();
  controlsim::LoopConfig lc;
  lc.horizon = cfg.controller.horizon;
  lc.steps_per_sample = cfg.controller.steps_per_sample;
  lc.e_scale = cfg.controller.e_scale;
  lc.edot_scale = cfg.controller.edot_scale;
  lc.u_scale = cfg.controller.u_scale;
  lc.rule_penalty = cfg.loss.rule_m;
  lc.divergence_bound = cfg.controller.divergence_bound;
  lc.adam = cfg.train.adam;

  const auto reference = reference_from(cfg);
  const auto records = controlsim::run_closed_loop(plant_from(cfg), controller, mark, rules,
                                                   reference, lc);
  const auto baseline = controlsim::run_zero_controller(plant_from(cfg), reference,
                                                        cfg.controller.horizon);

  const io::CsvTable loop = loop_table(records);
  const io::CsvTable base = loop_table(baseline);
  io::write_file_atomic(dir / "telemetry.csv", io::to_csv(loop));
  io::write_file_atomic(dir / "baseline.csv", io::to_csv(base));

  std::ostringstream snap;
  snap << "perceptlab-snapshot,v1\nwidths";
  for (int w : controller.widths()) snap << "," << w;
  snap << "\n";
  for (double v : controller.snapshot()) snap << "w," << io::format_double(v) << "\n";
  io::write_file_atomic(dir / "snapshot.csv", snap.str());

  RunArtifact artifact;
  artifact.dir = dir;
  artifact.report.experiment = std::string(config::experiment_name(cfg.kind));
  artifact.report.checks.push_back(tracking_check(loop, base));
  return artifact;
}

struct SubRun {
  double mu = 0.0;
  double alpha = 0.0;
  std::unique_ptr<TrainingSetup> setup;
  train::FitResult fit;
  std::vector<double> trajectory;
};

}  // namespace

RunArtifact run(const ExperimentConfig& cfg, const std::filesystem::path& out_root) {
  const std::filesystem::path dir = out_root / cfg.output;
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "config.resolved", config::serialize(cfg));

  if (cfg.kind == ExperimentKind::kFinnController) {
    RunArtifact artifact = run_controller(cfg, dir);
    io::write_file_atomic(dir / "report.txt", report_to_text(artifact.report));
    return artifact;
  }

  const auto grid = linspace(cfg.train.collocation.lo, cfg.train.collocation.hi,
                             cfg.oracle.verify_grid);

  RunArtifact artifact;
  artifact.dir = dir;
  artifact.report.experiment = std::string(config::experiment_name(cfg.kind));

  if (cfg.kind == ExperimentKind::kFcinnDecay && !cfg.fuzzy.pin_mu.empty()) {
    std::vector<NamedTrajectory> trajectories;
    for (double mu : cfg.fuzzy.pin_mu) {
      for (double alpha : cfg.fuzzy.pin_alpha) {
        SubRun sub;
        sub.mu = mu;
        sub.alpha = alpha;
        sub.setup = make_setup(cfg, PinnedGranule{mu, alpha});
        sub.fit = sub.setup->fit();
        sub.trajectory = sub.setup->evaluate(grid);
        const std::string sfx = granule_suffix(mu, alpha);
        io::write_file_atomic(dir / ("telemetry_" + sfx + ".csv"),
                              io::to_csv(telemetry_table(sub.fit)));
        write_snapshot(dir / ("snapshot_" + sfx + ".csv"), *sub.setup);
        write_trajectory(dir / ("trajectory_" + sfx + ".csv"), grid, sub.trajectory);
        if (sub.fit.abort_reason) {
          throw std::runtime_error("training aborted (" + *sub.fit.abort_reason +
                                   "); partial telemetry retained in " + dir.string());
        }
        trajectories.push_back(NamedTrajectory{mu, alpha, grid, sub.trajectory});
      }
    }
    std::vector<std::pair<double, oracle::Envelope>> envelopes;
    for (CheckResult& c : envelope_checks(cfg, trajectories, &envelopes))
      artifact.report.checks.push_back(std::move(c));
    for (const auto& [mu, env] : envelopes) {
      io::CsvTable t;
      t.header = {"t", "lo", "hi"};
      for (std::size_t i = 0; i < env.t.size(); ++i) t.rows.push_back({env.t[i], env.lo[i], env.hi[i]});
      io::write_file_atomic(dir / ("envelope_mu" + io::format_double(mu) + ".csv"), io::to_csv(t));
    }
    io::write_file_atomic(dir / "report.txt", report_to_text(artifact.report));
    return artifact;
  }

  // single-run experiments
  auto setup = make_setup(cfg);
  const auto fit = setup->fit();
  const auto trajectory = setup->evaluate(grid);
  const io::CsvTable telemetry = telemetry_table(fit);
  io::write_file_atomic(dir / "telemetry.csv", io::to_csv(telemetry));
  write_snapshot(dir / "snapshot.csv", *setup);
  write_trajectory(dir / "trajectory.csv", grid, trajectory);
  if (fit.abort_reason) {
    throw std::runtime_error("training aborted (" + *fit.abort_reason +
                             "); partial telemetry retained in " + dir.string());
  }

  switch (cfg.kind) {
    case ExperimentKind::kPinnDecay:
      artifact.report.checks.push_back(decay_trajectory_check(cfg, grid, trajectory));
      break;
    case ExperimentKind::kFcinnDecay:
      // learnable-granule variant: mu trains toward 1, so the trajectory must
      // land on the modal solution
      artifact.report.checks.push_back(decay_trajectory_check(cfg, grid, trajectory));
      break;
    case ExperimentKind::kSinnetOscillator: {
      const auto names = fit.telemetry.term_names;
      double final_ls = 0.0;
      for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == "sureness") final_ls = fit.telemetry.records.back().term_values[i];
      artifact.report.checks.push_back(
          make_check("final_sureness_loss", final_ls, "lt", kSurenessLossMax));
      break;
    }
    case ExperimentKind::kFinnCase1: {
      auto at = [&](double t) { return setup->evaluate({&t, 1}).front(); };
      for (CheckResult& c : finn_core_checks(cfg, at)) artifact.report.checks.push_back(std::move(c));
      artifact.report.checks.push_back(rule_ratio_check(telemetry, "rules"));
      break;
    }
    case ExperimentKind::kFinnDerivativeCase2: {
      auto at = [&](double t) { return setup->evaluate_derivative(t); };
      for (CheckResult& c : finn_core_checks(cfg, at)) artifact.report.checks.push_back(std::move(c));
      artifact.report.checks.push_back(rule_ratio_check(telemetry, "rules_derivative"));
      break;
    }
    default:
      break;
  }
  io::write_file_atomic(dir / "report.txt", report_to_text(artifact.report));
  return artifact;
}

// ---------------------------------------------------------------------------
// verify

VerificationReport verify(const std::filesystem::path& artifact_dir) {
  const auto parse = config::parse_config(io::read_file(artifact_dir / "config.resolved"));
  if (!parse.ok())
    throw std::runtime_error("config.resolved in " + artifact_dir.string() + " does not parse");
  const ExperimentConfig& cfg = *parse.config;

  VerificationReport report;
  report.experiment = std::string(config::experiment_name(cfg.kind));

  switch (cfg.kind) {
    case ExperimentKind::kPinnDecay: {
      const auto traj = io::read_csv(artifact_dir / "trajectory.csv");
      std::vector<double> ts, xs;
      for (const auto& row : traj.rows) {
        ts.push_back(row[0]);
        xs.push_back(row[1]);
      }
      report.checks.push_back(decay_trajectory_check(cfg, ts, xs));
      break;
    }
    case ExperimentKind::kFcinnDecay: {
      if (cfg.fuzzy.pin_mu.empty()) {
        const auto traj = io::read_csv(artifact_dir / "trajectory.csv");
        std::vector<double> ts, xs;
        for (const auto& row : traj.rows) {
          ts.push_back(row[0]);
          xs.push_back(row[1]);
        }
        report.checks.push_back(decay_trajectory_check(cfg, ts, xs));
        break;
      }
      std::vector<NamedTrajectory> trajectories;
      for (double mu : cfg.fuzzy.pin_mu) {
        for (double alpha : cfg.fuzzy.pin_alpha) {
          const auto file = artifact_dir / ("trajectory_" + granule_suffix(mu, alpha) + ".csv");
          const auto traj = io::read_csv(file);
          NamedTrajectory nt{mu, alpha, {}, {}};
          for (const auto& row : traj.rows) {
            nt.t.push_back(row[0]);
            nt.x.push_back(row[1]);
          }
          trajectories.push_back(std::move(nt));
        }
      }
      for (CheckResult& c : envelope_checks(cfg, trajectories, nullptr))
        report.checks.push_back(std::move(c));
      break;
    }
    case ExperimentKind::kSinnetOscillator: {
      const auto telemetry = io::read_csv(artifact_dir / "telemetry.csv");
      const int col = telemetry.column("sureness");
      if (col < 0 || telemetry.rows.empty())
        throw std::runtime_error("telemetry is missing the 'sureness' column");
      report.checks.push_back(make_check("final_sureness_loss",
                                         telemetry.rows.back()[static_cast<std::size_t>(col)],
                                         "lt", kSurenessLossMax));
      break;
    }
    case ExperimentKind::kFinnCase1: {
      auto net = load_net(artifact_dir / "snapshot.csv");
      for (CheckResult& c :
           finn_core_checks(cfg, [&](double t) { return net->value(t); }))
        report.checks.push_back(std::move(c));
      report.checks.push_back(rule_ratio_check(io::read_csv(artifact_dir / "telemetry.csv"), "rules"));
      break;
    }
    case ExperimentKind::kFinnDerivativeCase2: {
      auto net = load_net(artifact_dir / "snapshot.csv");
      for (CheckResult& c :
           finn_core_checks(cfg, [&](double t) { return net->deriv(t); }))
        report.checks.push_back(std::move(c));
      report.checks.push_back(
          rule_ratio_check(io::read_csv(artifact_dir / "telemetry.csv"), "rules_derivative"));
      break;
    }
    case ExperimentKind::kFinnController: {
      const auto loop = io::read_csv(artifact_dir / "telemetry.csv");
      const auto baseline = controlsim::run_zero_controller(plant_from(cfg), reference_from(cfg),
                                                            cfg.controller.horizon);
      report.checks.push_back(tracking_check(loop, loop_table(baseline)));
      break;
    }
  }
  return report;
}

}  // namespace perceptlab::experiments
