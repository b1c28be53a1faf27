#include "perceptlab/prob.hpp"

#include <cmath>
#include <stdexcept>

#include "perceptlab/rng.hpp"

namespace perceptlab::prob {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

Normal::Normal(double mean_, double variance_) : mean(mean_), variance(variance_) {
  if (!(variance > 0.0)) throw std::invalid_argument("normal: variance must be positive");
}

double pdf(const Normal& d, double x) {
  const double z2 = (x - d.mean) * (x - d.mean) / d.variance;
  return std::exp(-0.5 * z2) / std::sqrt(kTwoPi * d.variance);
}

Pushforward pushforward(const Normal& base, double offset, double slope) {
  if (slope == 0.0) return Pushforward{true, offset, Normal(0.0, 1.0)};
  return Pushforward{false, 0.0,
                     Normal(offset + slope * base.mean, slope * slope * base.variance)};
}

double normalized_likelihood(const Normal& d, double x) {
  const double z2 = (x - d.mean) * (x - d.mean) / d.variance;
  return std::exp(-0.5 * z2);
}

double normalized_likelihood(const Pushforward& p, double x) {
  if (p.degenerate) return x == p.point ? 1.0 : 0.0;
  return normalized_likelihood(p.distribution, x);
}

std::vector<double> sample(const Normal& d, std::uint64_t seed, std::size_t n) {
  if (n < 1) throw std::invalid_argument("sample: n must be at least 1");
  Rng rng(seed);
  const double sd = std::sqrt(d.variance);
  std::vector<double> out(n);
  for (double& v : out) v = d.mean + sd * rng.gaussian();
  return out;
}

}  // namespace perceptlab::prob
