#include "jnnts/sampler.hpp"

#include <cmath>
#include <thread>

#include "jnnts/error.hpp"

namespace jnnts {

const char* ablation_name(Ablation a) noexcept {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNodeOnly: return "node-only";
    case Ablation::kNetworkOnly: return "network-only";
  }
  return "unknown";
}

Ablation parse_ablation(const std::string& name) {
  if (name == "full") return Ablation::kFull;
  if (name == "node-only") return Ablation::kNodeOnly;
  if (name == "network-only") return Ablation::kNetworkOnly;
  throw_config("unknown ablation '" + name + "'");
}

void validate_config(const ModelConfig& config, const Dataset& data) {
  const auto& h = config.hyper;
  if (!(h.sigma_eta > 0.0)) throw_config("sigma_eta must be positive");
  if (!(h.lambda_max > 0.0)) throw_config("lambda_max must be positive");
  for (const auto* ig : {&h.beta, &h.alpha, &h.theta, &h.eps, &h.field}) {
    if (!(ig->shape > 0.0) || !(ig->rate > 0.0)) throw_config("inverse-gamma shapes and rates must be positive");
  }
  const auto& mh = config.mh;
  if (!(mh.step_rho > 0.0) || !(mh.step_lambda > 0.0)) throw_config("MH step sizes must be positive");
  if (!(mh.target_accept > 0.0 && mh.target_accept < 1.0)) throw_config("target_accept must lie in (0, 1)");
  if (mh.adapt_window == 0) throw_config("adapt_window must be positive");
  if (config.rank == 0 && config.ablation != Ablation::kNodeOnly)
    throw_config("rank must be at least 1 unless the network component is ablated");
  if (config.refresh_interval == 0) throw_config("refresh_interval must be positive");
  if (config.kernel.kind == KernelKind::kSquaredExponential && data.coords.size() == 0)
    throw_config("squared-exponential kernel requires node coordinates");
  if (config.delta < 0.0) throw_config("delta must be positive (or 0 for the default)");
}

ParameterState initial_state(std::size_t p, std::size_t q, const ModelConfig& config, Rng& rng) {
  const auto np = static_cast<Eigen::Index>(p);
  const auto nr = static_cast<Eigen::Index>(config.rank);
  auto std_normal_vec = [&](Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = sample_normal(rng, 0.0, 1.0);
    return v;
  };
  ParameterState s;
  s.eta = std_normal_vec(static_cast<Eigen::Index>(q));
  s.latent.beta_tilde = std_normal_vec(np);
  s.latent.gamma = std_normal_vec(np);
  s.latent.theta = std_normal_vec(np);
  s.latent.theta_r.resize(np, nr);
  s.latent.alpha_tilde.resize(np, nr);
  for (Eigen::Index r = 0; r < nr; ++r) s.latent.theta_r.col(r) = std_normal_vec(np);
  for (Eigen::Index r = 0; r < nr; ++r) s.latent.alpha_tilde.col(r) = std_normal_vec(np);
  s.latent.lambda = config.hyper.lambda_max / 2.0;
  s.rho = 0.0;
  return s;
}

namespace {

// Draw from N(precision^-1 b, precision^-1).
Vec sample_gaussian_precision(const Mat& precision, const Vec& b, Rng& rng) {
  Eigen::LLT<Mat> llt(precision);
  if (llt.info() != Eigen::Success) throw_numerical("conditional precision matrix is not positive definite");
  Vec mean = llt.solve(b);
  Vec z(b.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = sample_normal(rng, 0.0, 1.0);
  Vec noise = llt.matrixU().solve(z);
  return mean + noise;
}

GaussianConditional gaussian_from_precision(const Mat& precision, const Vec& b) {
  Eigen::LLT<Mat> llt(precision);
  if (llt.info() != Eigen::Success) throw_numerical("conditional precision matrix is not positive definite");
  GaussianConditional g;
  g.mean = llt.solve(b);
  g.covariance = llt.solve(Mat::Identity(precision.rows(), precision.cols()));
  return g;
}

}  // namespace

Sampler::Sampler(const Dataset& data, const PriorStructure& prior, const ModelConfig& config, ParameterState init)
    : data_(data), prior_(prior), config_(config), tuning_(config.mh), y_(data.y) {
  if (prior_.p() != data_.p()) throw_config("prior structure does not match the dataset node count");
  wtw_ = data_.W.transpose() * data_.W;
  xtx_ = data_.X.transpose() * data_.X;
  set_state(std::move(init));
}

void Sampler::set_state(ParameterState state) {
  const auto p = static_cast<Eigen::Index>(data_.p());
  const auto r = static_cast<Eigen::Index>(config_.rank);
  if (state.eta.size() != static_cast<Eigen::Index>(data_.q()) || state.latent.gamma.size() != p ||
      state.latent.theta.size() != p || state.latent.beta_tilde.size() != p ||
      state.latent.alpha_tilde.rows() != p || state.latent.alpha_tilde.cols() != r ||
      state.latent.theta_r.rows() != p || state.latent.theta_r.cols() != r)
    throw_config("parameter state dimensions do not match the model");
  if (!prior_.feasible(state.rho)) throw_config("initial rho violates the positive-definiteness constraint");
  state_ = std::move(state);
  refresh();
}

void Sampler::set_outcome(const Vec& y) {
  if (y.size() != y_.size()) throw_config("outcome length mismatch");
  y_ = y;
  refresh();
}

bool Sampler::node_active(std::size_t p) const {
  return node_enabled() && std::abs(state_.latent.gamma[p]) > state_.latent.lambda;
}

bool Sampler::network_active(std::size_t r, std::size_t p) const {
  const double lam = state_.latent.lambda;
  return network_enabled() && std::abs(state_.latent.theta[p]) > lam && std::abs(state_.latent.theta_r(p, r)) > lam;
}

Mask Sampler::node_indicators() const {
  Mask m(data_.p());
  for (std::size_t p = 0; p < data_.p(); ++p) m[p] = node_active(p) ? 1 : 0;
  return m;
}

Mask Sampler::network_indicators() const {
  const auto np = data_.p();
  Mask m(np * config_.rank);
  for (std::size_t r = 0; r < config_.rank; ++r)
    for (std::size_t p = 0; p < np; ++p) m[r * np + p] = network_active(r, p) ? 1 : 0;
  return m;
}

void Sampler::update_delta_cache() {
  delta_rho_ = prior_.delta_rho(state_.rho);
  d_delta_rho_ = prior_.d.cwiseProduct(delta_rho_);
}

void Sampler::refresh() {
  const auto n = data_.n();
  const auto np = data_.p();
  const auto nr = config_.rank;
  alpha_eff_ = Mat::Zero(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(nr));
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t p = 0; p < np; ++p)
      if (network_active(r, p)) alpha_eff_(p, r) = state_.latent.alpha_tilde(p, r);

  za_.assign(nr, Mat::Zero(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(n)));
  quad_ = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nr));
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t j = 0; j < np; ++j) {
      const double a = alpha_eff_(j, r);
      if (a == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) za_[r].col(i) += a * data_.Z[i].col(j);
    }
    for (std::size_t i = 0; i < n; ++i) quad_(i, r) = alpha_eff_.col(r).dot(za_[r].col(i));
  }

  Vec beta = state_.latent.beta_tilde;
  for (std::size_t p = 0; p < np; ++p)
    if (!node_active(p)) beta[p] = 0.0;
  resid_ = y_ - data_.W * state_.eta - data_.X * beta;
  if (nr > 0) resid_ -= quad_.rowwise().sum();

  g_ = prior_.U * state_.latent.gamma;
  t_ = prior_.U * state_.latent.theta;
  update_delta_cache();
}

void Sampler::set_alpha_effective(std::size_t r, std::size_t p, double value) {
  const double change = value - alpha_eff_(p, r);
  if (change == 0.0) return;
  const auto n = data_.n();
  for (std::size_t i = 0; i < n; ++i) {
    // z_ipp = 0, so the quadratic form moves by 2 * change * (Z_i alpha_r)_p.
    const double dq = 2.0 * change * za_[r](p, i);
    quad_(i, r) += dq;
    resid_[i] -= dq;
    za_[r].col(i) += change * data_.Z[i].col(p);
  }
  alpha_eff_(p, r) = value;
}

void Sampler::set_node_term(std::size_t p, bool active_before, bool active_after) {
  if (active_before == active_after) return;
  const double sign = active_after ? -1.0 : 1.0;
  resid_ += sign * state_.latent.beta_tilde[p] * data_.X.col(p);
}

// -- eta ---------------------------------------------------------------------

GaussianConditional Sampler::eta_conditional() const {
  const double se = state_.var.eps;
  Mat precision = wtw_ / se;
  precision.diagonal().array() += 1.0 / config_.hyper.sigma_eta;
  const Vec partial = resid_ + data_.W * state_.eta;
  return gaussian_from_precision(precision, data_.W.transpose() * partial / se);
}

void Sampler::update_eta(Rng& rng) {
  const double se = state_.var.eps;
  Mat precision = wtw_ / se;
  precision.diagonal().array() += 1.0 / config_.hyper.sigma_eta;
  const Vec partial = resid_ + data_.W * state_.eta;
  state_.eta = sample_gaussian_precision(precision, data_.W.transpose() * partial / se, rng);
  resid_ = partial - data_.W * state_.eta;
}

// -- beta_tilde --------------------------------------------------------------

GaussianConditional Sampler::beta_tilde_conditional() const {
  const auto np = static_cast<Eigen::Index>(data_.p());
  Vec mask(np);
  for (Eigen::Index p = 0; p < np; ++p) mask[p] = node_active(p) ? 1.0 : 0.0;
  const Vec beta = state_.latent.beta_tilde.cwiseProduct(mask);
  const Vec partial = resid_ + data_.X * beta;
  Mat precision = mask.asDiagonal() * xtx_ * mask.asDiagonal() / state_.var.eps;
  precision.diagonal().array() += 1.0 / state_.var.beta;
  const Vec rhs = mask.cwiseProduct(data_.X.transpose() * partial) / state_.var.eps +
                  state_.latent.gamma / state_.var.beta;
  return gaussian_from_precision(precision, rhs);
}

void Sampler::update_beta_tilde(Rng& rng) {
  const auto np = static_cast<Eigen::Index>(data_.p());
  Vec mask(np);
  for (Eigen::Index p = 0; p < np; ++p) mask[p] = node_active(p) ? 1.0 : 0.0;
  const Vec partial = resid_ + data_.X * state_.latent.beta_tilde.cwiseProduct(mask);
  Mat precision = mask.asDiagonal() * xtx_ * mask.asDiagonal() / state_.var.eps;
  precision.diagonal().array() += 1.0 / state_.var.beta;
  const Vec rhs = mask.cwiseProduct(data_.X.transpose() * partial) / state_.var.eps +
                  state_.latent.gamma / state_.var.beta;
  state_.latent.beta_tilde = sample_gaussian_precision(precision, rhs, rng);
  resid_ = partial - data_.X * state_.latent.beta_tilde.cwiseProduct(mask);
}

// -- alpha_tilde -------------------------------------------------------------

NormalConditional Sampler::alpha_conditional(std::size_t r, std::size_t p) const {
  const double theta_p = state_.latent.theta[p];
  const double sa = state_.var.alpha;
  if (!network_active(r, p)) return {theta_p, sa};
  const double current = alpha_eff_(p, r);
  double hh = 0.0;
  double xh = 0.0;
  for (std::size_t i = 0; i < data_.n(); ++i) {
    const double h = za_[r](p, i);
    const double xi = resid_[i] + 2.0 * current * h;  // residual with node p removed from factor r
    hh += h * h;
    xh += xi * h;
  }
  const double se = state_.var.eps;
  const double variance = 1.0 / (1.0 / sa + 4.0 * hh / se);
  return {variance * (theta_p / sa + 2.0 * xh / se), variance};
}

double Sampler::sample_alpha_tilde(std::size_t r, std::size_t p, Rng& rng) const {
  const auto c = alpha_conditional(r, p);
  return sample_normal(rng, c.mean, c.variance);
}

void Sampler::update_alpha_tilde(std::size_t r, std::size_t p, Rng& rng) {
  const double v = sample_alpha_tilde(r, p, rng);
  state_.latent.alpha_tilde(p, r) = v;
  if (network_active(r, p)) set_alpha_effective(r, p, v);
}

// -- theta^(r) ---------------------------------------------------------------

ThresholdMixture Sampler::theta_r_conditional(std::size_t r, std::size_t p) const {
  ThresholdMixture m;
  m.mean = state_.latent.theta[p];
  m.variance = state_.var.theta;
  m.lambda = state_.latent.lambda;
  if (!network_enabled() || !(std::abs(state_.latent.theta[p]) > m.lambda)) return m;
  // Only the difference between the active and inactive log-likelihoods matters.
  const double current = alpha_eff_(p, r);
  const double a = state_.latent.alpha_tilde(p, r);
  double hh = 0.0;
  double xh = 0.0;
  for (std::size_t i = 0; i < data_.n(); ++i) {
    const double h = za_[r](p, i);
    const double xi = resid_[i] + 2.0 * current * h;
    hh += h * h;
    xh += xi * h;
  }
  m.log_lik_active = (4.0 * a * xh - 4.0 * a * a * hh) / (2.0 * state_.var.eps);
  return m;
}

double Sampler::sample_theta_r(std::size_t r, std::size_t p, Rng& rng) const {
  return theta_r_conditional(r, p).sample(rng);
}

void Sampler::update_theta_r(std::size_t r, std::size_t p, Rng& rng) {
  state_.latent.theta_r(p, r) = sample_theta_r(r, p, rng);
  set_alpha_effective(r, p, network_active(r, p) ? state_.latent.alpha_tilde(p, r) : 0.0);
}

// -- gamma -------------------------------------------------------------------

ThresholdMixture Sampler::gamma_conditional(std::size_t p) const {
  const auto& U = prior_.U;
  const double sigma = state_.var.field;
  const double sb = state_.var.beta;
  const double gp = state_.latent.gamma[p];
  const double c = state_.rho / prior_.delta;
  double prec_field = 0.0;
  double lin_field = 0.0;
  for (Eigen::Index k = 0; k < U.rows(); ++k) {
    const double u = U(k, p);
    prec_field += u * u * d_delta_rho_[k];
    lin_field += u * delta_rho_[k] * (c * t_[k] - prior_.d[k] * (g_[k] - gp * u));
  }
  ThresholdMixture m;
  m.variance = 1.0 / (1.0 / sb + prec_field / sigma);
  m.mean = m.variance * (state_.latent.beta_tilde[p] / sb + lin_field / sigma);
  m.lambda = state_.latent.lambda;
  if (node_enabled()) {
    const double b = state_.latent.beta_tilde[p];
    const double current = node_active(p) ? b : 0.0;
    double s_xx = 0.0;
    double s_rx = 0.0;
    for (std::size_t i = 0; i < data_.n(); ++i) {
      const double x = data_.X(i, p);
      s_xx += x * x;
      s_rx += (resid_[i] + current * x) * x;
    }
    m.log_lik_active = (2.0 * b * s_rx - b * b * s_xx) / (2.0 * state_.var.eps);
  }
  return m;
}

double Sampler::sample_gamma(std::size_t p, Rng& rng) const { return gamma_conditional(p).sample(rng); }

void Sampler::update_gamma(std::size_t p, Rng& rng) {
  const bool before = node_active(p);
  const double old = state_.latent.gamma[p];
  const double v = sample_gamma(p, rng);
  state_.latent.gamma[p] = v;
  g_ += (v - old) * prior_.U.col(p);
  set_node_term(p, before, node_active(p));
}

// -- theta -------------------------------------------------------------------

ThresholdMixture Sampler::theta_conditional(std::size_t p) const {
  const auto& U = prior_.U;
  const double sigma = state_.var.field;
  const double tp = state_.latent.theta[p];
  const double c = state_.rho / prior_.delta;
  const auto nr = config_.rank;
  double prec_field = 0.0;
  double lin_field = 0.0;
  for (Eigen::Index k = 0; k < U.rows(); ++k) {
    const double u = U(k, p);
    prec_field += u * u * d_delta_rho_[k];
    lin_field += u * delta_rho_[k] * (c * g_[k] - prior_.d[k] * (t_[k] - tp * u));
  }
  const double sa = state_.var.alpha;
  const double st = state_.var.theta;
  double sum_alpha = 0.0;
  double sum_theta_r = 0.0;
  for (std::size_t r = 0; r < nr; ++r) {
    sum_alpha += state_.latent.alpha_tilde(p, r);
    sum_theta_r += state_.latent.theta_r(p, r);
  }
  ThresholdMixture m;
  const double rank = static_cast<double>(nr);
  m.variance = 1.0 / (rank / sa + rank / st + prec_field / sigma);
  m.mean = m.variance * (sum_alpha / sa + sum_theta_r / st + lin_field / sigma);
  m.lambda = state_.latent.lambda;
  if (!network_enabled() || nr == 0) return m;

  // c_i: contribution of node p to every factor where its individual gate is open.
  const double lam = m.lambda;
  std::vector<std::size_t> open;
  for (std::size_t r = 0; r < nr; ++r)
    if (std::abs(state_.latent.theta_r(p, r)) > lam) open.push_back(r);
  if (open.empty()) return m;
  double s_cc = 0.0;
  double s_xc = 0.0;
  for (std::size_t i = 0; i < data_.n(); ++i) {
    double removed = 0.0;  // contribution currently in the residual
    double ci = 0.0;
    for (auto r : open) {
      const double h = za_[r](p, i);
      removed += 2.0 * alpha_eff_(p, r) * h;
      ci += 2.0 * state_.latent.alpha_tilde(p, r) * h;
    }
    const double xi = resid_[i] + removed;
    s_cc += ci * ci;
    s_xc += xi * ci;
  }
  m.log_lik_active = (2.0 * s_xc - s_cc) / (2.0 * state_.var.eps);
  return m;
}

double Sampler::sample_theta(std::size_t p, Rng& rng) const { return theta_conditional(p).sample(rng); }

void Sampler::update_theta(std::size_t p, Rng& rng) {
  const double old = state_.latent.theta[p];
  const double v = sample_theta(p, rng);
  state_.latent.theta[p] = v;
  t_ += (v - old) * prior_.U.col(p);
  for (std::size_t r = 0; r < config_.rank; ++r)
    set_alpha_effective(r, p, network_active(r, p) ? state_.latent.alpha_tilde(p, r) : 0.0);
}

// -- variances ---------------------------------------------------------------

void Sampler::update_variances(Rng& rng) {
  const auto& h = config_.hyper;
  const auto& lat = state_.latent;
  const double np = static_cast<double>(data_.p());
  const double nr = static_cast<double>(config_.rank);

  state_.var.beta = sample_inverse_gamma(rng, h.beta.shape + np / 2.0,
                                         h.beta.rate + 0.5 * (lat.beta_tilde - lat.gamma).squaredNorm());
  double ss_alpha = 0.0;
  double ss_theta = 0.0;
  for (std::size_t r = 0; r < config_.rank; ++r) {
    ss_alpha += (lat.alpha_tilde.col(r) - lat.theta).squaredNorm();
    ss_theta += (lat.theta_r.col(r) - lat.theta).squaredNorm();
  }
  state_.var.alpha = sample_inverse_gamma(rng, h.alpha.shape + np * nr / 2.0, h.alpha.rate + 0.5 * ss_alpha);
  state_.var.theta = sample_inverse_gamma(rng, h.theta.shape + np * nr / 2.0, h.theta.rate + 0.5 * ss_theta);
  state_.var.eps = sample_inverse_gamma(rng, h.eps.shape + static_cast<double>(data_.n()) / 2.0,
                                        h.eps.rate + 0.5 * resid_.squaredNorm());
}

double Sampler::field_quadratic() const { return prior_.field_quadratic(g_, t_, state_.rho); }

void Sampler::update_field_variance(Rng& rng) {
  const auto& h = config_.hyper;
  // Two P-dimensional fields: shape grows by P, not P/2.
  state_.var.field = sample_inverse_gamma(rng, h.field.shape + static_cast<double>(data_.p()),
                                          h.field.rate + 0.5 * field_quadratic());
}

// -- Metropolis-Hastings -----------------------------------------------------

double Sampler::log_f_rho(double rho) const {
  return -prior_.field_quadratic(g_, t_, rho) / (2.0 * state_.var.field) - 0.5 * prior_.log_det_term(rho);
}

bool Sampler::mh_update_rho(Rng& rng) {
  const double proposal = state_.rho + tuning_.step_rho * sample_normal(rng, 0.0, 1.0);
  if (!prior_.feasible(proposal)) return false;
  const double log_ratio = log_f_rho(proposal) - log_f_rho(state_.rho);
  if (std::log(sample_uniform(rng)) > std::min(0.0, log_ratio)) return false;
  state_.rho = proposal;
  update_delta_cache();
  return true;
}

Vec Sampler::residual_for(double lambda) const {
  const auto n = data_.n();
  const auto np = data_.p();
  const auto& lat = state_.latent;
  Vec beta = Vec::Zero(static_cast<Eigen::Index>(np));
  if (node_enabled())
    for (std::size_t p = 0; p < np; ++p)
      if (std::abs(lat.gamma[p]) > lambda) beta[p] = lat.beta_tilde[p];
  Vec out = y_ - data_.W * state_.eta - data_.X * beta;
  if (!network_enabled()) return out;
  std::vector<std::size_t> active;
  std::vector<double> coef;
  for (std::size_t r = 0; r < config_.rank; ++r) {
    active.clear();
    coef.clear();
    for (std::size_t p = 0; p < np; ++p) {
      if (std::abs(lat.theta[p]) > lambda && std::abs(lat.theta_r(p, r)) > lambda) {
        active.push_back(p);
        coef.push_back(lat.alpha_tilde(p, r));
      }
    }
    if (active.empty()) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const Mat& z = data_.Z[i];
      double q = 0.0;
      for (std::size_t a = 0; a < active.size(); ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < a; ++b) row += coef[b] * z(active[b], active[a]);
        q += 2.0 * coef[a] * row;
      }
      out[i] -= q;
    }
  }
  return out;
}

double Sampler::log_f_lambda(double lambda) const {
  return -residual_for(lambda).squaredNorm() / (2.0 * state_.var.eps);
}

bool Sampler::mh_update_lambda(Rng& rng) {
  const double proposal = state_.latent.lambda + tuning_.step_lambda * sample_normal(rng, 0.0, 1.0);
  if (proposal < 0.0 || proposal > config_.hyper.lambda_max) return false;
  const Vec candidate = residual_for(proposal);
  const double log_ratio = (resid_.squaredNorm() - candidate.squaredNorm()) / (2.0 * state_.var.eps);
  if (std::log(sample_uniform(rng)) > std::min(0.0, log_ratio)) return false;
  state_.latent.lambda = proposal;
  refresh();
  return true;
}

// -- sweep -------------------------------------------------------------------

SweepOutcome Sampler::sweep(Rng& rng) {
  const auto np = data_.p();
  update_eta(rng);
  update_beta_tilde(rng);
  for (std::size_t r = 0; r < config_.rank; ++r)
    for (std::size_t p = 0; p < np; ++p) update_alpha_tilde(r, p, rng);
  for (std::size_t r = 0; r < config_.rank; ++r)
    for (std::size_t p = 0; p < np; ++p) update_theta_r(r, p, rng);
  for (std::size_t p = 0; p < np; ++p) update_gamma(p, rng);
  for (std::size_t p = 0; p < np; ++p) update_theta(p, rng);
  update_variances(rng);
  update_field_variance(rng);
  SweepOutcome out;
  out.rho_accepted = mh_update_rho(rng);
  out.lambda_accepted = mh_update_lambda(rng);
  return out;
}

// -- chains ------------------------------------------------------------------

Rng make_rng(std::uint64_t seed, std::size_t chain_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain_index), 0x6a6e6e74u};
  return Rng(seq);
}

PosteriorChain run_chain(const Dataset& data, const PriorStructure& prior, const ModelConfig& config,
                         std::uint64_t seed, std::size_t n_iter, std::size_t n_burn, std::size_t chain_index) {
  validate_config(config, data);
  if (n_burn > n_iter) throw_config("n_burn must not exceed n_iter");

  Rng rng = make_rng(seed, chain_index);
  PosteriorChain chain;
  chain.header = {data.n(), data.p(), data.q(), config.rank, n_iter, n_burn, seed, chain_index, config.ablation};
  chain.draws.reserve(n_iter - n_burn);

  Sampler sampler(data, prior, config, initial_state(data.p(), data.q(), config, rng));
  std::size_t window_rho = 0;
  std::size_t window_lambda = 0;
  std::size_t window_len = 0;

  for (std::size_t it = 0; it < n_iter; ++it) {
    const auto outcome = sampler.sweep(rng);
    const bool acc_rho = outcome.rho_accepted;
    const bool acc_lambda = outcome.lambda_accepted;

    if ((it + 1) % config.refresh_interval == 0) sampler.refresh();

    if (it < n_burn) {
      if (sampler.tuning().adapt) {
        window_rho += acc_rho;
        window_lambda += acc_lambda;
        if (++window_len == sampler.tuning().adapt_window) {
          auto& tune = sampler.tuning();
          const double w = static_cast<double>(window_len);
          tune.step_rho *= std::exp(static_cast<double>(window_rho) / w - tune.target_accept);
          tune.step_lambda *= std::exp(static_cast<double>(window_lambda) / w - tune.target_accept);
          window_rho = window_lambda = window_len = 0;
        }
      }
      continue;
    }
    chain.rho_accepted += acc_rho;
    chain.lambda_accepted += acc_lambda;
    ++chain.retained_proposals;
    chain.draws.push_back(sampler.state());
    chain.node_indicators.push_back(sampler.node_indicators());
    chain.network_indicators.push_back(sampler.network_indicators());
  }
  chain.final_step_rho = sampler.tuning().step_rho;
  chain.final_step_lambda = sampler.tuning().step_lambda;
  return chain;
}

std::vector<PosteriorChain> run_chains(const Dataset& data, const PriorStructure& prior, const ModelConfig& config,
                                       std::uint64_t seed, std::size_t n_iter, std::size_t n_burn,
                                       std::size_t chains) {
  if (chains == 0) throw_config("need at least one chain");
  validate_config(config, data);
  std::vector<PosteriorChain> out(chains);
  std::vector<std::exception_ptr> errors(chains);
  {
    std::vector<std::jthread> workers;
    workers.reserve(chains);
    for (std::size_t c = 0; c < chains; ++c) {
      workers.emplace_back([&, c] {
        try {
          out[c] = run_chain(data, prior, config, seed, n_iter, n_burn, c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace jnnts
