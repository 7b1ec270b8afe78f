#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jnnts/inference.hpp"
#include "jnnts/model.hpp"
#include "jnnts/sampler.hpp"

namespace jnnts {

enum class Scenario { kCoupled, kDecoupled, kEdgeRemoved, kMixedHighDim, kCustom };

const char* scenario_name(Scenario s) noexcept;
Scenario parse_scenario(const std::string& name);

struct ScenarioSpec {
  Scenario scenario = Scenario::kCoupled;
  std::size_t p = 20;
  std::size_t n = 200;  // training size, validation split included
  std::size_t n_test = 100;
  double validation_fraction = 0.1;
  /// Noise variance of the outcome.
  double sigma_eps = 2.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> true_nodes;
  std::vector<std::vector<std::size_t>> true_subnetworks;
  std::vector<Edge> removed_edges;
  /// Equicorrelation of the node features; 0 gives independent columns.
  double x_correlation = 0.0;
};

/// Default layouts: 10 true nodes and two 5-node cliques (S1-S3, P=20), or a
/// P=100, N=1000 layout with one clique inside the node set and one outside.
ScenarioSpec default_scenario(Scenario s, double sigma_eps = 2.0, std::uint64_t seed = 0);

void validate_scenario(const ScenarioSpec& spec);

struct GroundTruth {
  ScenarioSpec spec;
  Vec gamma;
  Vec theta;
  CoefficientSet coefficients;  // alpha before any edge removal
  Mat signal_matrix;            // A after edge removal
  std::vector<Edge> true_edges;
  Vec noise_train;
  Vec noise_validation;
  Vec noise_test;
};

struct ScenarioData {
  Dataset train;
  Dataset validation;
  Dataset test;
  GroundTruth truth;
};

/// Pure in the spec (seed included).
ScenarioData generate_scenario(const ScenarioSpec& spec);

/// Unit-spaced 3-D grid positions for P nodes.
Mat grid_coordinates(std::size_t p);

/// 1 - SSE/SST. Throws when the outcome has no spread.
double r_squared(const Vec& y, const Vec& prediction);

struct RunLength {
  std::size_t n_iter = 10000;
  std::size_t n_burn = 5000;
};

struct TuneResult {
  std::size_t chosen_rank = 0;
  std::vector<std::size_t> candidates;
  std::vector<double> validation_r2;
};

/// One chain per candidate rank on train, scored by validation R^2; ties go to
/// the smaller rank.
TuneResult tune_rank(const Dataset& train, const Dataset& validation, std::vector<std::size_t> candidates,
                     const ModelConfig& config, std::uint64_t seed, RunLength length);

struct FitMetrics {
  std::optional<double> node_sens;
  std::optional<double> node_spec;
  std::optional<double> edge_sens;
  std::optional<double> edge_spec;
  double r2_test = 0.0;
  std::size_t chosen_rank = 0;
};

FitMetrics score(const SelectionSummary& summary, const Dataset& test, const GroundTruth& truth,
                 std::size_t chosen_rank);

/// Same metrics from explicit selections; sets outside the truth are negatives.
FitMetrics score_selection(const std::vector<std::size_t>& selected_nodes, const std::vector<Edge>& selected_edges,
                           const GroundTruth& truth);

}  // namespace jnnts
