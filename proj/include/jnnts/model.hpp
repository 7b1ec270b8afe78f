#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace jnnts {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Mask = std::vector<std::uint8_t>;

/// Observed data for N subjects over P nodes.
///
/// W carries covariates with a leading column of ones, X node features and
/// Z one symmetric zero-diagonal P x P connectivity matrix per subject.
/// coords holds node locations as a P x 3 matrix and may be empty when the
/// kernel does not need them.
struct Dataset {
  Vec y;
  Mat W;
  Mat X;
  std::vector<Mat> Z;
  Mat coords;

  std::size_t n() const { return static_cast<std::size_t>(y.size()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t q() const { return static_cast<std::size_t>(W.cols()); }
};

/// Checks shapes and the structural invariants of a dataset. Nonzero Z
/// diagonals are zeroed with a warning; every other violation throws an
/// input error.
void validate_dataset(Dataset& data);

/// Effective regression coefficients. alpha holds one factor per column.
struct CoefficientSet {
  Vec eta;
  Vec beta;
  Mat alpha;  // P x R

  std::size_t rank() const { return static_cast<std::size_t>(alpha.cols()); }

  /// Sum of factor outer products, built symmetrically entry by entry.
  Mat network_matrix() const;
};

/// Latent quantities behind the thresholded coefficients.
struct LatentState {
  Vec beta_tilde;   // P
  Mat alpha_tilde;  // P x R
  Vec gamma;        // P
  Vec theta;        // P
  Mat theta_r;      // P x R
  double lambda = 0.0;

  std::size_t p() const { return static_cast<std::size_t>(gamma.size()); }
  std::size_t rank() const { return static_cast<std::size_t>(alpha_tilde.cols()); }
};

Mask threshold_node(const Vec& gamma, double lambda);
Mask threshold_network(const Vec& theta, const Vec& theta_r, double lambda);

/// beta = beta_tilde o T(gamma; lambda), alpha^(r) = alpha_tilde^(r) o T(theta, theta^(r); lambda).
/// eta is left empty.
CoefficientSet effective_coefficients(const LatentState& state);

/// Linear predictor eta'w_i + beta'x_i + sum_r alpha_r' Z_i alpha_r, one
/// entry per subject. Quadratic forms are evaluated factor by factor.
Vec predict(const Dataset& data, const CoefficientSet& coeffs);

/// Same predictor evaluated through a materialized network matrix A:
/// eta'w_i + beta'x_i + <A, Z_i>.
Vec predict_with_matrix(const Dataset& data, const Vec& eta, const Vec& beta, const Mat& A);

enum class CliqueVerdict { kUnique, kNotVerifiable, kDegenerate };

const char* clique_verdict_name(CliqueVerdict v) noexcept;

/// Each support set must own at least one node that appears in no other set.
CliqueVerdict verify_clique_uniqueness(std::span<const std::vector<std::size_t>> supports);

}  // namespace jnnts
