#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jnnts/model.hpp"
#include "jnnts/prior.hpp"
#include "jnnts/truncnorm.hpp"

namespace jnnts {

struct InverseGammaPrior {
  double shape = 0.1;
  double rate = 0.1;
};

struct HyperPriors {
  double sigma_eta = 10.0;
  double lambda_max = 1.5;
  InverseGammaPrior beta;
  InverseGammaPrior alpha;
  InverseGammaPrior theta;
  InverseGammaPrior eps;
  InverseGammaPrior field;
};

/// Random-walk settings for the two Metropolis-Hastings steps.
struct MhTuning {
  double step_rho = 0.5;
  double step_lambda = 0.1;
  bool adapt = true;
  std::size_t adapt_window = 50;
  double target_accept = 0.234;
};

enum class Ablation { kFull, kNodeOnly, kNetworkOnly };

const char* ablation_name(Ablation a) noexcept;
Ablation parse_ablation(const std::string& name);

struct ModelConfig {
  std::size_t rank = 2;
  KernelSpec kernel;
  Ablation ablation = Ablation::kFull;
  /// <= 0 picks max(10, ceil(1/d_min)).
  double delta = 0.0;
  HyperPriors hyper;
  MhTuning mh;
  /// Sweeps between full recomputations of the cached residuals.
  std::size_t refresh_interval = 100;
};

/// Throws a configuration error when the settings are unusable for `data`.
void validate_config(const ModelConfig& config, const Dataset& data);

struct Variances {
  double beta = 1.0;
  double alpha = 1.0;
  double theta = 1.0;
  double eps = 1.0;
  double field = 1.0;
};

/// Every unknown of the model at one iteration.
struct ParameterState {
  Vec eta;
  LatentState latent;
  Variances var;
  double rho = 0.0;
};

/// Random initial state: latent effects and fields N(0, 1), variances 1,
/// rho 0 and lambda at half its upper bound.
ParameterState initial_state(std::size_t p, std::size_t q, const ModelConfig& config, Rng& rng);

struct NormalConditional {
  double mean = 0.0;
  double variance = 1.0;
};

struct GaussianConditional {
  Vec mean;
  Mat covariance;
};

struct SweepOutcome {
  bool rho_accepted = false;
  bool lambda_accepted = false;
};

/// Gibbs/MH kernel for one chain.
///
/// The sampler keeps the masked factors, the per-subject products Z_i alpha_r,
/// the quadratic forms and the residual vector up to date after every element
/// draw, so a single-coordinate move costs O(N P) instead of O(N P^2 R).
/// The `*_conditional` accessors describe the current full conditional of a
/// coordinate; `sample_*` draw from it without changing the state and
/// `update_*` draw and commit.
class Sampler {
 public:
  Sampler(const Dataset& data, const PriorStructure& prior, const ModelConfig& config, ParameterState init);

  const ParameterState& state() const { return state_; }
  void set_state(ParameterState state);
  /// Replaces the outcome vector (used when data are re-simulated).
  void set_outcome(const Vec& y);
  const Vec& outcome() const { return y_; }

  MhTuning& tuning() { return tuning_; }
  const MhTuning& tuning() const { return tuning_; }

  /// One full sweep in the fixed order: eta, beta_tilde, alpha_tilde
  /// elements, theta^(r) elements, gamma elements, theta elements, the four
  /// effect/noise variances, sigma, rho (MH), lambda (MH).
  SweepOutcome sweep(Rng& rng);

  /// Recomputes every cache from the current state.
  void refresh();

  GaussianConditional eta_conditional() const;
  GaussianConditional beta_tilde_conditional() const;
  NormalConditional alpha_conditional(std::size_t r, std::size_t p) const;
  ThresholdMixture theta_r_conditional(std::size_t r, std::size_t p) const;
  ThresholdMixture gamma_conditional(std::size_t p) const;
  ThresholdMixture theta_conditional(std::size_t p) const;

  double sample_alpha_tilde(std::size_t r, std::size_t p, Rng& rng) const;
  double sample_theta_r(std::size_t r, std::size_t p, Rng& rng) const;
  double sample_gamma(std::size_t p, Rng& rng) const;
  double sample_theta(std::size_t p, Rng& rng) const;

  void update_eta(Rng& rng);
  void update_beta_tilde(Rng& rng);
  void update_alpha_tilde(std::size_t r, std::size_t p, Rng& rng);
  void update_theta_r(std::size_t r, std::size_t p, Rng& rng);
  void update_gamma(std::size_t p, Rng& rng);
  void update_theta(std::size_t p, Rng& rng);
  void update_variances(Rng& rng);
  void update_field_variance(Rng& rng);
  bool mh_update_rho(Rng& rng);
  bool mh_update_lambda(Rng& rng);

  /// log f_rho: -xi_rho/(2 sigma) - (1/2) sum_k log(d_k^2 - rho^2/delta^2).
  double log_f_rho(double rho) const;
  /// log f_lambda: -||xi(lambda)||^2 / (2 sigma_eps), residual recomputed from scratch.
  double log_f_lambda(double lambda) const;

  /// Residual y - eta'w - beta'x - sum_r alpha_r' Z alpha_r under the cached state.
  const Vec& residual() const { return resid_; }
  /// Current quadratic form of the joint (gamma, theta) prior, xi_rho.
  double field_quadratic() const;

  bool node_active(std::size_t p) const;
  bool network_active(std::size_t r, std::size_t p) const;
  Mask node_indicators() const;
  /// r-major: entry r * P + p.
  Mask network_indicators() const;

 private:
  bool node_enabled() const { return config_.ablation != Ablation::kNetworkOnly; }
  bool network_enabled() const { return config_.ablation != Ablation::kNodeOnly; }

  Vec residual_for(double lambda) const;
  void set_alpha_effective(std::size_t r, std::size_t p, double value);
  void set_node_term(std::size_t p, bool active_before, bool active_after);
  void update_delta_cache();

  const Dataset& data_;
  const PriorStructure& prior_;
  ModelConfig config_;
  MhTuning tuning_;
  ParameterState state_;

  Vec y_;
  Mat wtw_;
  Mat xtx_;

  Mat alpha_eff_;           // P x R masked factors
  std::vector<Mat> za_;     // R matrices, P x N, column i = Z_i alpha_r
  Mat quad_;                // N x R
  Vec resid_;               // N
  Vec g_;                   // U gamma
  Vec t_;                   // U theta
  Vec delta_rho_;           // diag of Delta_rho
  Vec d_delta_rho_;         // d_k * Delta_rho_k
};

struct ChainHeader {
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t rank = 0;
  std::size_t n_iter = 0;
  std::size_t n_burn = 0;
  std::uint64_t seed = 0;
  std::size_t chain_index = 0;
  Ablation ablation = Ablation::kFull;
};

struct PosteriorChain {
  ChainHeader header;
  std::vector<ParameterState> draws;
  std::vector<Mask> node_indicators;
  std::vector<Mask> network_indicators;
  std::size_t rho_accepted = 0;
  std::size_t lambda_accepted = 0;
  std::size_t retained_proposals = 0;
  double final_step_rho = 0.0;
  double final_step_lambda = 0.0;

  std::size_t size() const { return draws.size(); }
  bool empty() const { return draws.empty(); }
};

/// Seeds the generator for chain `chain_index` of the seed family `seed`.
Rng make_rng(std::uint64_t seed, std::size_t chain_index = 0);

/// Runs one chain; deterministic in (seed, chain_index). Step sizes adapt only
/// during burn-in.
PosteriorChain run_chain(const Dataset& data, const PriorStructure& prior, const ModelConfig& config,
                         std::uint64_t seed, std::size_t n_iter, std::size_t n_burn, std::size_t chain_index = 0);

/// Runs `chains` independent chains concurrently over shared data.
std::vector<PosteriorChain> run_chains(const Dataset& data, const PriorStructure& prior, const ModelConfig& config,
                                       std::uint64_t seed, std::size_t n_iter, std::size_t n_burn,
                                       std::size_t chains);

}  // namespace jnnts
