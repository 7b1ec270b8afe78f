#include "jnnts/truncnorm.hpp"

#include <cmath>
#include <numbers>

#include "jnnts/error.hpp"

namespace jnnts {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double std_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = u(rng);
  while (v <= 0.0) v = u(rng);
  return v;
}

// Robert (1995) exponential proposal for the tail [a, inf), a > 0; rejects
// draws above b.
double sample_exponential_tail(Rng& rng, double a, double b) {
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(uniform_open(rng)) / rate;
    if (z > b) continue;
    const double u = uniform_open(rng);
    if (std::log(u) <= -0.5 * (z - rate) * (z - rate)) return z;
  }
}

double sample_uniform_box(Rng& rng, double a, double b) {
  // exp(-z^2/2) envelope normalized at the point of [a, b] closest to zero.
  const double m2 = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(a * a, b * b);
  std::uniform_real_distribution<double> u(a, b);
  for (;;) {
    const double z = u(rng);
    if (std::log(uniform_open(rng)) <= 0.5 * (m2 - z * z)) return z;
  }
}

double sample_plain_rejection(Rng& rng, double a, double b) {
  for (;;) {
    const double z = std_normal(rng);
    if (z >= a && z <= b) return z;
  }
}

// Two-sided interval with 0 <= a < b (a may be 0 only for the wide case).
double sample_upper_interval(Rng& rng, double a, double b) {
  const double width = b - a;
  const double log_mass = log_normal_interval(a, b);
  const double acc_uniform = std::exp(log_mass + kLogSqrt2Pi + 0.5 * a * a) / width;
  double acc_normal = std::exp(log_mass);
  double acc_exp = 0.0;
  if (a > 0.0) {
    const double tail_a = log_normal_cdf(-a);
    const double tail_b = log_normal_cdf(-b);
    acc_exp = 0.7 * (1.0 - std::exp(tail_b - tail_a));
  }
  if (acc_uniform >= acc_normal && acc_uniform >= acc_exp) return sample_uniform_box(rng, a, b);
  if (acc_normal >= acc_exp) return sample_plain_rejection(rng, a, b);
  return sample_exponential_tail(rng, a, b);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double log_normal_cdf(double x) {
  if (x == -kInf) return -kInf;
  if (x > 5.0) return std::log1p(-0.5 * std::erfc(x / kSqrt2));
  if (x > -35.0) return std::log(0.5 * std::erfc(-x / kSqrt2));
  // Asymptotic series of the Mills ratio.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - kLogSqrt2Pi + std::log(series);
}

double log_normal_interval(double a, double b) {
  if (!(a < b)) return -kInf;
  if (a >= 0.0) {
    const double hi = log_normal_cdf(-a);
    const double lo = log_normal_cdf(-b);
    return hi + std::log1p(-std::exp(lo - hi));
  }
  if (b <= 0.0) {
    const double hi = log_normal_cdf(b);
    const double lo = log_normal_cdf(a);
    return hi + std::log1p(-std::exp(lo - hi));
  }
  return std::log1p(-normal_cdf(a) - normal_cdf(-b));
}

double sample_standard_truncated_normal(Rng& rng, double a, double b) {
  if (!(a < b)) {
    if (a == b) return a;
    throw_numerical("truncated normal: empty interval");
  }
  if (a == -kInf && b == kInf) return std_normal(rng);
  if (b <= 0.0 || (a == -kInf)) {
    // Reflect so the interval sits on the upper side.
    return -sample_standard_truncated_normal(rng, -b, -a);
  }
  if (b == kInf) {
    if (a < 0.5) return sample_plain_rejection(rng, a, b);
    return sample_exponential_tail(rng, a, b);
  }
  if (a < 0.0) {
    // Interval straddles zero.
    if (b - a < std::sqrt(2.0 * std::numbers::pi)) return sample_uniform_box(rng, a, b);
    return sample_plain_rejection(rng, a, b);
  }
  return sample_upper_interval(rng, a, b);
}

double sample_truncated_normal(Rng& rng, double mean, double variance, double lower, double upper) {
  const double sd = std::sqrt(variance);
  const double a = lower == -kInf ? -kInf : (lower - mean) / sd;
  const double b = upper == kInf ? kInf : (upper - mean) / sd;
  return mean + sd * sample_standard_truncated_normal(rng, a, b);
}

std::array<double, 3> ThresholdMixture::weights() const {
  const double sd = std::sqrt(variance);
  const double lo = (-lambda - mean) / sd;
  const double hi = (lambda - mean) / sd;
  std::array<double, 3> lw = {
      log_lik_active + log_normal_cdf(lo),
      log_lik_inactive + log_normal_interval(lo, hi),
      log_lik_active + log_normal_cdf(-hi),
  };
  double mx = -kInf;
  for (double v : lw) mx = std::max(mx, v);
  if (!std::isfinite(mx)) throw_numerical("threshold mixture: all component weights vanish");
  double total = 0.0;
  for (double& v : lw) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : lw) v /= total;
  return lw;
}

double ThresholdMixture::sample(Rng& rng) const {
  const auto w = weights();
  const double u = sample_uniform(rng);
  if (u < w[0]) return sample_truncated_normal(rng, mean, variance, -kInf, -lambda);
  if (u < w[0] + w[1]) return sample_truncated_normal(rng, mean, variance, -lambda, lambda);
  return sample_truncated_normal(rng, mean, variance, lambda, kInf);
}

double ThresholdMixture::cdf(double x) const {
  const auto w = weights();
  const double sd = std::sqrt(variance);
  const double lo = (-lambda - mean) / sd;
  const double hi = (lambda - mean) / sd;
  const double z = (x - mean) / sd;
  auto piece = [&](double a, double b) {
    // Fraction of TN(a, b) mass lying below z.
    if (z <= a) return 0.0;
    if (z >= b) return 1.0;
    return std::exp(log_normal_interval(a, z) - log_normal_interval(a, b));
  };
  double out = 0.0;
  if (w[0] > 0.0) out += w[0] * piece(-kInf, lo);
  if (w[1] > 0.0) out += w[1] * piece(lo, hi);
  if (w[2] > 0.0) out += w[2] * piece(hi, kInf);
  return out;
}

double sample_normal(Rng& rng, double mean, double variance) {
  return mean + std::sqrt(variance) * std_normal(rng);
}

double sample_inverse_gamma(Rng& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw_numerical("inverse gamma: non-positive shape or rate");
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  double x = g(rng);
  while (x <= 0.0) x = g(rng);
  return 1.0 / x;
}

double sample_uniform(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng);
}

}  // namespace jnnts
