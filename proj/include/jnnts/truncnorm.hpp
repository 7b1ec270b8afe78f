#pragma once

#include <array>
#include <limits>
#include <random>

namespace jnnts {

using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double x);

/// log F(x) for the standard normal CDF, accurate far into the lower tail.
double log_normal_cdf(double x);

/// log(F(b) - F(a)) for a <= b; -inf when the interval is empty.
double log_normal_interval(double a, double b);

/// Standard normal truncated to [a, b]; either bound may be infinite.
double sample_standard_truncated_normal(Rng& rng, double a, double b);

/// N(mean, variance) truncated to [lower, upper].
double sample_truncated_normal(Rng& rng, double mean, double variance, double lower, double upper);

/// Three-piece conditional used by every threshold field update:
///
///   psi_-1 TN(-inf, -lambda) + psi_0 TN(-lambda, lambda) + psi_1 TN(lambda, inf)
///
/// with common location/variance. The "active" log-likelihood applies to the
/// two outer pieces (|x| > lambda) and the "inactive" one to the middle piece.
struct ThresholdMixture {
  double mean = 0.0;
  double variance = 1.0;
  double lambda = 0.0;
  double log_lik_active = 0.0;
  double log_lik_inactive = 0.0;

  /// Normalized weights (psi_-1, psi_0, psi_1), computed in log space.
  std::array<double, 3> weights() const;

  double sample(Rng& rng) const;

  /// CDF of the mixture at x; used by the conditional-density checks.
  double cdf(double x) const;
};

double sample_normal(Rng& rng, double mean, double variance);

/// Inverse-gamma draw parameterized by shape and rate (scale of the gamma on 1/x).
double sample_inverse_gamma(Rng& rng, double shape, double rate);

double sample_uniform(Rng& rng);

}  // namespace jnnts
