// Probability-distribution mode: normal densities, the affine pushforward of
// a residual through an uncertain parameter, mode-normalized likelihoods, and
// seeded Monte Carlo sampling.

#pragma once

#include <cstdint>
#include <vector>

namespace perceptlab::prob {

struct Normal {
  Normal(double mean, double variance);  // variance must be > 0

  double mean;
  double variance;
};

/// Density of `d` at x.
double pdf(const Normal& d, double x);

/// Distribution of offset + slope * theta for theta ~ base. A zero slope
/// degenerates to a point mass and is signalled instead of erroring so the
/// sureness loss can treat the likelihood as 1 exactly when the point is hit.
struct Pushforward {
  bool degenerate;
  double point;        // mass location when degenerate
  Normal distribution; // valid when !degenerate
};

Pushforward pushforward(const Normal& base, double offset, double slope);

/// pdf(x) / pdf(mean): in (0, 1], equal to 1 iff x == mean.
double normalized_likelihood(const Normal& d, double x);
double normalized_likelihood(const Pushforward& p, double x);

/// Deterministic draws; same seed, same sequence.
std::vector<double> sample(const Normal& d, std::uint64_t seed, std::size_t n);

}  // namespace perceptlab::prob
