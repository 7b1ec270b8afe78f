#pragma once

#include <utility>
#include <vector>

#include "jnnts/model.hpp"

namespace jnnts {

enum class KernelKind { kSquaredExponential, kMarginalIdentity, kHemisphereSymmetric };

const char* kernel_kind_name(KernelKind kind) noexcept;
KernelKind parse_kernel_kind(const std::string& name);

struct KernelSpec {
  KernelKind kind = KernelKind::kSquaredExponential;
  /// Correlation assigned to each listed node pair (hemisphere-symmetric only).
  double pair_correlation = 0.2;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

/// Kernel matrix over nodes. coords is P x 3; for kMarginalIdentity and
/// kHemisphereSymmetric only its row count is used, or `p` when coords is empty.
Mat build_kernel(const Mat& coords, const KernelSpec& spec, std::size_t p = 0);

/// O = U' diag(d) U, with the eigenvalues d sorted in descending order and
/// the eigenvectors stored as the rows of U.
struct EigenPair {
  Mat U;
  Vec d;
  double d_min() const { return d[d.size() - 1]; }
};

EigenPair eigendecompose(const Mat& O);

/// Positive definiteness of the joint (gamma, theta) covariance with shared
/// scale sigma and cross scale sigma/delta: |rho|/delta <= d_min.
bool check_pd_constraint(double rho, double delta, double d_min);

/// Smallest delta >= 10 that keeps the joint covariance positive definite
/// for every rho in (-1, 1).
double default_delta(double d_min);

/// Immutable prior geometry shared by all chains.
struct PriorStructure {
  Mat O;
  Mat U;
  Vec d;
  double delta = 10.0;

  std::size_t p() const { return static_cast<std::size_t>(d.size()); }
  double d_min() const { return d[d.size() - 1]; }

  /// diag{1/(d_k^2 - rho^2/delta^2)}. Only meaningful when feasible(rho).
  Vec delta_rho(double rho) const;

  /// Quadratic form of the joint prior precision (times sigma) at (gamma, theta),
  /// given the rotated fields g = U gamma and t = U theta.
  double field_quadratic(const Vec& g, const Vec& t, double rho) const;

  /// sum_k log(d_k^2 - rho^2/delta^2)
  double log_det_term(double rho) const;

  bool feasible(double rho) const;
};

/// Builds the kernel, decomposes it and floors tiny eigenvalues at
/// 1e-10 * d_max (with a warning). delta <= 0 selects default_delta.
PriorStructure make_prior_structure(const Mat& coords, const KernelSpec& spec, std::size_t p, double delta = 0.0);

/// Dense 2P x 2P joint covariance [[sigma O, c I], [c I, sigma O]] with c = rho sigma / delta.
Mat joint_covariance(const Mat& O, double rho, double delta, double sigma);

}  // namespace jnnts
