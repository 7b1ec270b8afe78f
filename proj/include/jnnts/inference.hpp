#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jnnts/model.hpp"
#include "jnnts/sampler.hpp"

namespace jnnts {

using Edge = std::pair<std::size_t, std::size_t>;

/// Concatenates retained draws of chains fitted to the same model.
PosteriorChain merge_chains(std::span<const PosteriorChain> chains);

/// Fraction of retained iterations with the node indicator on.
Vec compute_node_mpp(const PosteriorChain& chain);

/// Per-iteration relabeling of the R factors onto a common reference:
/// perm[t][slot] is the factor of draw t reported under `slot`. Each draw is
/// matched to the reference supports by maximal total Jaccard overlap; the
/// reference is refined from the aligned frequencies a few times.
std::vector<std::vector<std::size_t>> align_factors(const PosteriorChain& chain);

/// One symmetric zero-diagonal P x P matrix per factor: the fraction of
/// iterations in which both endpoints are gated into that factor. With
/// `align` the factors are relabeled by align_factors first.
std::vector<Mat> compute_edge_mpp(const PosteriorChain& chain, bool align = true);

/// Fraction of iterations in which the edge sits in at least one factor;
/// free of any labeling choice.
Mat compute_union_edge_mpp(const PosteriorChain& chain);

struct SubNetwork {
  std::vector<std::size_t> nodes;
  std::vector<Edge> edges;
};

struct QuantileEdges {
  double quantile = 0.0;
  double threshold = 0.0;
  std::vector<Edge> edges;
};

struct SelectionSummary {
  double cutoff = 0.5;
  Vec node_mpp;
  std::vector<Mat> edge_mpp;
  Mat union_edge_mpp;
  std::vector<std::size_t> selected_nodes;
  std::vector<SubNetwork> selected_subnetworks;
  std::vector<Edge> selected_edges;  // union edge MPP above the cutoff
  Vec eta_hat;
  Vec beta_hat;
  std::vector<Mat> subnetwork_effects;
  Mat network_effect;  // posterior mean of sum_r alpha_r alpha_r'
  CliqueVerdict uniqueness_verdict = CliqueVerdict::kDegenerate;
  std::vector<QuantileEdges> quantile_edges;
  std::size_t draws = 0;
};

/// Median-probability-model summary. Effects average the masked draws, so an
/// iteration where a feature is switched off contributes zero.
SelectionSummary summarize(const PosteriorChain& chain, double cutoff = 0.5);

/// Prediction from posterior-mean effects.
Vec predict_posterior_mean(const Dataset& data, const SelectionSummary& summary);

struct MonitoredScalar {
  std::string name;
  std::function<double(const ParameterState&)> extract;
};

/// log sigma_eps, lambda, rho and the log of every other variance component.
std::vector<MonitoredScalar> default_monitored_scalars();

struct ScalarDiagnostic {
  std::string name;
  double psrf = 1.0;
  double within = 0.0;
  double between = 0.0;
  /// Below the attainable minimum sqrt((n-1)/n); signals an estimator fault.
  bool suspicious = false;
};

struct TraceSummary {
  std::string name;
  std::size_t chain = 0;
  double mean = 0.0;
  double variance = 0.0;
};

struct ConvergenceReport {
  std::vector<ScalarDiagnostic> gr_statistics;
  std::vector<TraceSummary> trace_summaries;
  std::vector<double> rho_accept_rate;
  std::vector<double> lambda_accept_rate;

  double max_psrf() const;
};

/// Potential scale reduction factor of equal-length series (at least two
/// series of length >= 10):
///   V = (n-1)/n W + (m+1)/(m n) B,  PSRF = sqrt(V / W).
ScalarDiagnostic gelman_rubin(std::span<const std::vector<double>> chains, const std::string& name = "");

ConvergenceReport gelman_rubin(std::span<const PosteriorChain> chains, std::span<const MonitoredScalar> monitored);

}  // namespace jnnts
