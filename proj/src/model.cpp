#include "jnnts/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "jnnts/error.hpp"

namespace jnnts {

namespace {

void default_warning(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

WarningHandler g_warning_handler = &default_warning;

}  // namespace

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInput: return "input_error";
    case ErrorCode::kConfiguration: return "configuration_error";
    case ErrorCode::kNumerical: return "numerical_error";
    case ErrorCode::kNonConvergence: return "non_convergence";
    case ErrorCode::kDiagnostic: return "diagnostic_error";
  }
  return "unknown_error";
}

void set_warning_handler(WarningHandler handler) noexcept {
  g_warning_handler = handler ? handler : &default_warning;
}

void warn(const std::string& message) { g_warning_handler(message); }

void validate_dataset(Dataset& data) {
  const auto n = data.n();
  const auto p = data.p();
  if (n < 1) throw_input("dataset: need at least one subject");
  if (p < 2) throw_input("dataset: need at least two nodes");
  if (data.q() < 1) throw_input("dataset: covariate matrix W needs at least one column");
  if (static_cast<std::size_t>(data.W.rows()) != n)
    throw_input("dataset: W has " + std::to_string(data.W.rows()) + " rows, expected " + std::to_string(n));
  if (static_cast<std::size_t>(data.X.rows()) != n)
    throw_input("dataset: X has " + std::to_string(data.X.rows()) + " rows, expected " + std::to_string(n));
  if (data.Z.size() != n)
    throw_input("dataset: " + std::to_string(data.Z.size()) + " connectivity matrices, expected " + std::to_string(n));
  if (data.coords.size() != 0 && (static_cast<std::size_t>(data.coords.rows()) != p || data.coords.cols() != 3))
    throw_input("dataset: coords must be P x 3");

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(data.y[i])) throw_input("dataset: non-finite y at row " + std::to_string(i));
    if (data.W(i, 0) != 1.0) throw_input("dataset: W column 0 must be all ones (row " + std::to_string(i) + ")");
    if (!data.W.row(i).allFinite()) throw_input("dataset: non-finite W at row " + std::to_string(i));
    if (!data.X.row(i).allFinite()) throw_input("dataset: non-finite X at row " + std::to_string(i));
  }

  bool zeroed = false;
  for (std::size_t i = 0; i < n; ++i) {
    Mat& z = data.Z[i];
    if (static_cast<std::size_t>(z.rows()) != p || static_cast<std::size_t>(z.cols()) != p)
      throw_input("dataset: Z[" + std::to_string(i) + "] is not P x P");
    if (!z.allFinite()) throw_input("dataset: non-finite entry in Z[" + std::to_string(i) + "]");
    for (std::size_t k = 0; k < p; ++k) {
      if (z(k, k) != 0.0) {
        z(k, k) = 0.0;
        zeroed = true;
      }
      for (std::size_t l = k + 1; l < p; ++l) {
        if (z(k, l) != z(l, k)) {
          std::ostringstream os;
          os << "dataset: Z[" << i << "] not symmetric at (" << k << ", " << l << ")";
          throw_input(os.str());
        }
      }
    }
  }
  if (zeroed) warn("nonzero diagonal entries in Z were set to zero");
}

Mat CoefficientSet::network_matrix() const {
  const auto p = alpha.rows();
  Mat a = Mat::Zero(p, p);
  for (Eigen::Index r = 0; r < alpha.cols(); ++r) {
    for (Eigen::Index k = 0; k < p; ++k) {
      for (Eigen::Index l = k; l < p; ++l) {
        a(k, l) += alpha(k, r) * alpha(l, r);
      }
    }
  }
  for (Eigen::Index k = 0; k < p; ++k)
    for (Eigen::Index l = k + 1; l < p; ++l) a(l, k) = a(k, l);
  return a;
}

Mask threshold_node(const Vec& gamma, double lambda) {
  Mask out(static_cast<std::size_t>(gamma.size()));
  for (Eigen::Index p = 0; p < gamma.size(); ++p) out[p] = std::abs(gamma[p]) > lambda ? 1 : 0;
  return out;
}

Mask threshold_network(const Vec& theta, const Vec& theta_r, double lambda) {
  Mask out(static_cast<std::size_t>(theta.size()));
  for (Eigen::Index p = 0; p < theta.size(); ++p)
    out[p] = (std::abs(theta[p]) > lambda && std::abs(theta_r[p]) > lambda) ? 1 : 0;
  return out;
}

CoefficientSet effective_coefficients(const LatentState& state) {
  CoefficientSet c;
  const auto node = threshold_node(state.gamma, state.lambda);
  c.beta = state.beta_tilde;
  for (Eigen::Index p = 0; p < c.beta.size(); ++p)
    if (!node[p]) c.beta[p] = 0.0;
  c.alpha = state.alpha_tilde;
  for (Eigen::Index r = 0; r < c.alpha.cols(); ++r) {
    const auto net = threshold_network(state.theta, state.theta_r.col(r), state.lambda);
    for (Eigen::Index p = 0; p < c.alpha.rows(); ++p)
      if (!net[p]) c.alpha(p, r) = 0.0;
  }
  return c;
}

namespace {

void check_dims(const Dataset& data, const Vec& eta, const Vec& beta, Eigen::Index alpha_rows) {
  if (static_cast<std::size_t>(eta.size()) != data.q())
    throw_config("predict: eta has length " + std::to_string(eta.size()) + ", dataset has Q=" + std::to_string(data.q()));
  if (static_cast<std::size_t>(beta.size()) != data.p())
    throw_config("predict: beta has length " + std::to_string(beta.size()) + ", dataset has P=" + std::to_string(data.p()));
  if (static_cast<std::size_t>(alpha_rows) != data.p())
    throw_config("predict: network coefficients do not match P=" + std::to_string(data.p()));
}

}  // namespace

Vec predict(const Dataset& data, const CoefficientSet& coeffs) {
  check_dims(data, coeffs.eta, coeffs.beta, coeffs.alpha.rows());
  Vec out = data.W * coeffs.eta + data.X * coeffs.beta;
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (Eigen::Index r = 0; r < coeffs.alpha.cols(); ++r) {
      const auto a = coeffs.alpha.col(r);
      out[i] += a.dot(data.Z[i] * a);
    }
  }
  return out;
}

Vec predict_with_matrix(const Dataset& data, const Vec& eta, const Vec& beta, const Mat& A) {
  check_dims(data, eta, beta, A.rows());
  Vec out = data.W * eta + data.X * beta;
  for (std::size_t i = 0; i < data.n(); ++i) out[i] += A.cwiseProduct(data.Z[i]).sum();
  return out;
}

const char* clique_verdict_name(CliqueVerdict v) noexcept {
  switch (v) {
    case CliqueVerdict::kUnique: return "unique";
    case CliqueVerdict::kNotVerifiable: return "not-verifiable";
    case CliqueVerdict::kDegenerate: return "degenerate";
  }
  return "unknown";
}

CliqueVerdict verify_clique_uniqueness(std::span<const std::vector<std::size_t>> supports) {
  if (supports.empty()) return CliqueVerdict::kDegenerate;
  std::unordered_map<std::size_t, std::size_t> membership;
  for (const auto& g : supports) {
    if (g.empty()) return CliqueVerdict::kDegenerate;
    // Count each node at most once per set.
    std::vector<std::size_t> sorted = g;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (auto node : sorted) ++membership[node];
  }
  for (const auto& g : supports) {
    bool has_private = false;
    for (auto node : g) {
      if (membership[node] == 1) {
        has_private = true;
        break;
      }
    }
    if (!has_private) return CliqueVerdict::kNotVerifiable;
  }
  return CliqueVerdict::kUnique;
}

}  // namespace jnnts
