#pragma once

// Test-only oracles. Nothing in here goes through the sampler's cached
// residuals or eigen-rotated field algebra: the log joint is evaluated from a
// dense joint covariance and a fresh prediction, so it can be used to check
// the sampler's conditionals independently.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "jnnts/model.hpp"
#include "jnnts/prior.hpp"
#include "jnnts/sampler.hpp"
#include "jnnts/truncnorm.hpp"

namespace jnnts::testing {

inline Mat random_symmetric_zero_diag(std::size_t p, Rng& rng) {
  const auto np = static_cast<Eigen::Index>(p);
  Mat z = Mat::Zero(np, np);
  for (Eigen::Index k = 0; k < np; ++k)
    for (Eigen::Index l = k + 1; l < np; ++l) {
      z(k, l) = sample_normal(rng, 0.0, 1.0);
      z(l, k) = z(k, l);
    }
  return z;
}

inline Dataset random_dataset(std::size_t n, std::size_t p, std::size_t q, Rng& rng) {
  Dataset d;
  const auto nn = static_cast<Eigen::Index>(n);
  const auto np = static_cast<Eigen::Index>(p);
  const auto nq = static_cast<Eigen::Index>(q);
  d.y = Vec::Zero(nn);
  d.W = Mat::Ones(nn, nq);
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index j = 1; j < nq; ++j) d.W(i, j) = sample_normal(rng, 0.0, 1.0);
  d.X.resize(nn, np);
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index j = 0; j < np; ++j) d.X(i, j) = sample_normal(rng, 0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) d.Z.push_back(random_symmetric_zero_diag(p, rng));
  d.coords.resize(np, 3);
  for (Eigen::Index k = 0; k < np; ++k)
    for (int c = 0; c < 3; ++c) d.coords(k, c) = 1.5 * sample_normal(rng, 0.0, 1.0);
  return d;
}

/// Draws Phi from its prior. The (gamma, theta) pair comes from a Cholesky
/// factor of the dense joint covariance.
inline ParameterState sample_prior_state(std::size_t p, std::size_t q, const ModelConfig& cfg,
                                         const PriorStructure& prior, Rng& rng) {
  const auto& h = cfg.hyper;
  const auto np = static_cast<Eigen::Index>(p);
  const auto nr = static_cast<Eigen::Index>(cfg.rank);
  ParameterState s;
  s.var.beta = sample_inverse_gamma(rng, h.beta.shape, h.beta.rate);
  s.var.alpha = sample_inverse_gamma(rng, h.alpha.shape, h.alpha.rate);
  s.var.theta = sample_inverse_gamma(rng, h.theta.shape, h.theta.rate);
  s.var.eps = sample_inverse_gamma(rng, h.eps.shape, h.eps.rate);
  s.var.field = sample_inverse_gamma(rng, h.field.shape, h.field.rate);
  do {
    s.rho = -1.0 + 2.0 * sample_uniform(rng);
  } while (!prior.feasible(s.rho));
  s.latent.lambda = h.lambda_max * sample_uniform(rng);
  s.eta.resize(static_cast<Eigen::Index>(q));
  for (auto& v : s.eta) v = sample_normal(rng, 0.0, h.sigma_eta);

  const Mat cov = joint_covariance(prior.O, s.rho, prior.delta, s.var.field);
  const Mat chol = cov.llt().matrixL();
  Vec z(2 * np);
  for (auto& v : z) v = sample_normal(rng, 0.0, 1.0);
  const Vec gt = chol * z;
  s.latent.gamma = gt.head(np);
  s.latent.theta = gt.tail(np);

  s.latent.beta_tilde.resize(np);
  for (Eigen::Index k = 0; k < np; ++k) s.latent.beta_tilde[k] = sample_normal(rng, s.latent.gamma[k], s.var.beta);
  s.latent.theta_r.resize(np, nr);
  s.latent.alpha_tilde.resize(np, nr);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index k = 0; k < np; ++k) {
      s.latent.theta_r(k, r) = sample_normal(rng, s.latent.theta[k], s.var.theta);
      s.latent.alpha_tilde(k, r) = sample_normal(rng, s.latent.theta[k], s.var.alpha);
    }
  return s;
}

inline CoefficientSet coefficients_of(const ParameterState& s, Ablation ablation = Ablation::kFull) {
  CoefficientSet c = effective_coefficients(s.latent);
  c.eta = s.eta;
  if (ablation == Ablation::kNodeOnly) c.alpha.setZero();
  if (ablation == Ablation::kNetworkOnly) c.beta.setZero();
  return c;
}

inline Vec simulate_outcome(const Dataset& data, const ParameterState& s, Rng& rng) {
  Vec mean = predict(data, coefficients_of(s));
  for (auto& v : mean) v = sample_normal(rng, v, s.var.eps);
  return mean;
}

/// Unnormalized log joint density of (y, Phi) in every coordinate that the
/// element-wise conditionals touch. Terms that do not depend on gamma, theta,
/// theta^(r), beta_tilde or alpha_tilde are dropped.
inline double log_joint(const Dataset& data, const PriorStructure& prior, const ParameterState& s,
                        Ablation ablation = Ablation::kFull) {
  const Vec resid = data.y - predict(data, coefficients_of(s, ablation));
  double lp = -resid.squaredNorm() / (2.0 * s.var.eps);
  lp -= (s.latent.beta_tilde - s.latent.gamma).squaredNorm() / (2.0 * s.var.beta);
  for (Eigen::Index r = 0; r < s.latent.alpha_tilde.cols(); ++r) {
    lp -= (s.latent.alpha_tilde.col(r) - s.latent.theta).squaredNorm() / (2.0 * s.var.alpha);
    lp -= (s.latent.theta_r.col(r) - s.latent.theta).squaredNorm() / (2.0 * s.var.theta);
  }
  const Mat cov = joint_covariance(prior.O, s.rho, prior.delta, s.var.field);
  const auto np = s.latent.gamma.size();
  Vec gt(2 * np);
  gt << s.latent.gamma, s.latent.theta;
  lp -= 0.5 * gt.dot(cov.ldlt().solve(gt));
  return lp;
}

/// CDF of exp(log_density) on [lo, hi], integrated with the trapezoid rule
/// on a uniform grid that also contains every breakpoint.
struct GridCdf {
  std::vector<double> x;
  std::vector<double> cdf;

  double operator()(double v) const {
    if (v <= x.front()) return 0.0;
    if (v >= x.back()) return 1.0;
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    const auto j = static_cast<std::size_t>(it - x.begin());
    const double w = (v - x[j - 1]) / (x[j] - x[j - 1]);
    return cdf[j - 1] + w * (cdf[j] - cdf[j - 1]);
  }
};

inline GridCdf grid_cdf(const std::function<double(double)>& log_density, double lo, double hi,
                        std::size_t points, std::vector<double> breakpoints = {}) {
  GridCdf g;
  for (std::size_t k = 0; k < points; ++k)
    g.x.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1));
  // Evaluate on both sides of each jump so the trapezoid rule does not smear it.
  for (double b : breakpoints) {
    if (b <= lo || b >= hi) continue;
    const double eps = 1e-9 * std::max(1.0, std::abs(b));
    g.x.push_back(b - eps);
    g.x.push_back(b + eps);
  }
  std::sort(g.x.begin(), g.x.end());
  std::vector<double> lv(g.x.size());
  double mx = -kInf;
  for (std::size_t k = 0; k < g.x.size(); ++k) {
    lv[k] = log_density(g.x[k]);
    mx = std::max(mx, lv[k]);
  }
  g.cdf.assign(g.x.size(), 0.0);
  for (std::size_t k = 1; k < g.x.size(); ++k) {
    const double a = std::exp(lv[k - 1] - mx);
    const double b = std::exp(lv[k] - mx);
    g.cdf[k] = g.cdf[k - 1] + 0.5 * (a + b) * (g.x[k] - g.x[k - 1]);
  }
  const double total = g.cdf.back();
  for (auto& c : g.cdf) c /= total;
  return g;
}

/// sup_x |F_n(x) - F(x)| for the sample against a reference CDF.
template <class Cdf>
double ks_distance(std::vector<double> sample, const Cdf& ref) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    const double f = ref(sample[k]);
    d = std::max(d, std::abs(static_cast<double>(k + 1) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(k) / n));
  }
  return d;
}

/// Batch-means standard error of the mean of an autocorrelated series.
inline double batch_means_se(const std::vector<double>& series, std::size_t batches) {
  const std::size_t len = series.size() / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t k = 0; k < len; ++k) means[b] += series[b * len + k];
    means[b] /= static_cast<double>(len);
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= static_cast<double>(batches);
  double s2 = 0.0;
  for (double v : means) s2 += (v - m) * (v - m);
  s2 /= static_cast<double>(batches - 1);
  return std::sqrt(s2 / static_cast<double>(batches));
}

}  // namespace jnnts::testing
