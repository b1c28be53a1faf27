#include "perceptlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "perceptlab/rng.hpp"

namespace perceptlab::oracle {

DampedOscillator::DampedOscillator(double zeta_, double omega_, double x0_, double xdot0_)
    : zeta(zeta_), omega(omega_), x0(x0_), xdot0(xdot0_) {
  if (!(zeta > 0.0 && zeta < 1.0))
    throw std::invalid_argument("oscillator: only the underdamped branch (0 < zeta < 1) is supported");
  if (!(omega > 0.0)) throw std::invalid_argument("oscillator: omega must be positive");
}

double analytic(const Family& family, double t) {
  if (const auto* d = std::get_if<ExpDecay>(&family)) return d->x0 * std::exp(d->lambda * t);
  const auto& o = std::get<DampedOscillator>(family);
  const double wd = o.omega * std::sqrt(1.0 - o.zeta * o.zeta);
  const double a = o.x0;
  const double b = (o.xdot0 + o.zeta * o.omega * o.x0) / wd;
  return std::exp(-o.zeta * o.omega * t) * (a * std::cos(wd * t) + b * std::sin(wd * t));
}

double analytic_derivative(const Family& family, double t) {
  if (const auto* d = std::get_if<ExpDecay>(&family))
    return d->lambda * d->x0 * std::exp(d->lambda * t);
  const auto& o = std::get<DampedOscillator>(family);
  const double wd = o.omega * std::sqrt(1.0 - o.zeta * o.zeta);
  const double a = o.x0;
  const double b = (o.xdot0 + o.zeta * o.omega * o.x0) / wd;
  const double s = o.zeta * o.omega;
  const double e = std::exp(-s * t);
  const double c = std::cos(wd * t), sn = std::sin(wd * t);
  return e * (-s * (a * c + b * sn) + (-a * wd * sn + b * wd * c));
}

CrispODE CrispODE::from(const Family& family) {
  CrispODE ode;
  if (const auto* d = std::get_if<ExpDecay>(&family)) {
    const double lambda = d->lambda;
    ode.order = 1;
    ode.rhs1 = [lambda](double, double x) { return lambda * x; };
    ode.x0 = d->x0;
    return ode;
  }
  const auto& o = std::get<DampedOscillator>(family);
  const double zeta = o.zeta, omega = o.omega;
  ode.order = 2;
  ode.rhs2 = [zeta, omega](double, double x, double xdot) {
    return -2.0 * zeta * omega * xdot - omega * omega * x;
  };
  ode.x0 = o.x0;
  ode.xdot0 = o.xdot0;
  return ode;
}

namespace {

struct State {
  double x, xdot;
};

State rk4_step(const CrispODE& ode, double t, State s, double h) {
  if (ode.order == 1) {
    const double k1 = ode.rhs1(t, s.x);
    const double k2 = ode.rhs1(t + 0.5 * h, s.x + 0.5 * h * k1);
    const double k3 = ode.rhs1(t + 0.5 * h, s.x + 0.5 * h * k2);
    const double k4 = ode.rhs1(t + h, s.x + h * k3);
    s.x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return s;
  }
  // order 2: integrate (x, xdot) jointly
  auto f = [&](double tt, const State& u) {
    return State{u.xdot, ode.rhs2(tt, u.x, u.xdot)};
  };
  const State k1 = f(t, s);
  const State k2 = f(t + 0.5 * h, State{s.x + 0.5 * h * k1.x, s.xdot + 0.5 * h * k1.xdot});
  const State k3 = f(t + 0.5 * h, State{s.x + 0.5 * h * k2.x, s.xdot + 0.5 * h * k2.xdot});
  const State k4 = f(t + h, State{s.x + h * k3.x, s.xdot + h * k3.xdot});
  s.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  s.xdot += h / 6.0 * (k1.xdot + 2.0 * k2.xdot + 2.0 * k3.xdot + k4.xdot);
  return s;
}

}  // namespace

std::vector<double> rk4(const CrispODE& ode, std::span<const double> t_grid, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("rk4: step must be positive");
  if (t_grid.empty()) throw std::invalid_argument("rk4: empty time grid");
  if (ode.order != 1 && ode.order != 2) throw std::invalid_argument("rk4: order must be 1 or 2");
  if ((ode.order == 1 && !ode.rhs1) || (ode.order == 2 && !ode.rhs2))
    throw std::invalid_argument("rk4: missing right-hand side");

  std::vector<double> out;
  out.reserve(t_grid.size());
  State s{ode.x0, ode.xdot0};
  double t = t_grid.front();
  out.push_back(s.x);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double target = t_grid[i];
    if (target < t) throw std::invalid_argument("rk4: time grid must be nondecreasing");
    const double span = target - t;
    if (span > 0.0) {
      const int n_sub = std::max(1, static_cast<int>(std::ceil(span / h - 1e-12)));
      const double hs = span / n_sub;
      for (int k = 0; k < n_sub; ++k) s = rk4_step(ode, t + k * hs, s, hs);
      t = target;
    }
    out.push_back(s.x);
  }
  return out;
}

namespace {

Family with_param(const Family& base, const std::string& name, double value) {
  if (const auto* d = std::get_if<ExpDecay>(&base)) {
    ExpDecay e = *d;
    if (name == "lambda") e.lambda = value;
    else if (name == "x0") e.x0 = value;
    else throw std::invalid_argument("exp-decay has no parameter '" + name + "'");
    return e;
  }
  const auto& o = std::get<DampedOscillator>(base);
  double zeta = o.zeta, omega = o.omega, x0 = o.x0, xdot0 = o.xdot0;
  if (name == "zeta") zeta = value;
  else if (name == "omega") omega = value;
  else if (name == "x0") x0 = value;
  else if (name == "xdot0") xdot0 = value;
  else throw std::invalid_argument("oscillator has no parameter '" + name + "'");
  return DampedOscillator(zeta, omega, x0, xdot0);
}

}  // namespace

Envelope alpha_cut_envelope(const Family& base, std::span<const FuzzyParam> fuzzy_params,
                            double mu, std::span<const double> t_grid, int k, double h) {
  if (fuzzy_params.empty()) throw std::invalid_argument("envelope: no fuzzy parameters");
  if (k < 2) throw std::invalid_argument("envelope: need at least 2 grid points per parameter");

  Envelope env;
  env.t.assign(t_grid.begin(), t_grid.end());
  env.lo.assign(t_grid.size(), std::numeric_limits<double>::infinity());
  env.hi.assign(t_grid.size(), -std::numeric_limits<double>::infinity());

  // one value grid per fuzzy parameter over its mu-level cut
  std::vector<std::vector<double>> grids;
  for (const FuzzyParam& p : fuzzy_params) {
    const auto cut = fuzzy::alpha_cut(p.number, mu);
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
      g.push_back(cut.lo + (cut.hi - cut.lo) * (static_cast<double>(i) / (k - 1)));
    grids.push_back(std::move(g));
  }

  std::vector<std::size_t> idx(fuzzy_params.size(), 0);
  while (true) {
    Family f = base;
    for (std::size_t p = 0; p < fuzzy_params.size(); ++p)
      f = with_param(f, fuzzy_params[p].name, grids[p][idx[p]]);
    const auto traj = rk4(CrispODE::from(f), t_grid, h);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      env.lo[i] = std::min(env.lo[i], traj[i]);
      env.hi[i] = std::max(env.hi[i], traj[i]);
    }
    // advance the mixed-radix counter
    std::size_t p = 0;
    while (p < idx.size() && ++idx[p] == grids[p].size()) idx[p++] = 0;
    if (p == idx.size()) break;
  }
  return env;
}

EnsembleStats mc_ensemble(const Family& base, std::span<const RandomParam> random_params,
                          std::size_t n, std::uint64_t seed, std::span<const double> t_grid,
                          double h) {
  if (n < 100) throw std::invalid_argument("mc_ensemble: need at least 100 draws");
  if (random_params.empty()) throw std::invalid_argument("mc_ensemble: no random parameters");

  EnsembleStats stats;
  stats.t.assign(t_grid.begin(), t_grid.end());
  stats.mean.assign(t_grid.size(), 0.0);
  stats.variance.assign(t_grid.size(), 0.0);

  Rng rng(seed);
  std::vector<double> m2(t_grid.size(), 0.0);
  for (std::size_t draw = 1; draw <= n; ++draw) {
    Family f = base;
    for (const RandomParam& p : random_params) {
      const double v = p.distribution.mean + std::sqrt(p.distribution.variance) * rng.gaussian();
      f = with_param(f, p.name, v);
    }
    const auto traj = rk4(CrispODE::from(f), t_grid, h);
    for (std::size_t i = 0; i < traj.size(); ++i) {  // Welford
      const double delta = traj[i] - stats.mean[i];
      stats.mean[i] += delta / static_cast<double>(draw);
      m2[i] += delta * (traj[i] - stats.mean[i]);
    }
  }
  for (std::size_t i = 0; i < m2.size(); ++i)
    stats.variance[i] = m2[i] / static_cast<double>(n - 1);
  return stats;
}

}  // namespace perceptlab::oracle
