#include "jnnts/prior.hpp"

#include <cmath>
#include <sstream>

#include "jnnts/error.hpp"

namespace jnnts {

const char* kernel_kind_name(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::kSquaredExponential: return "squared-exponential";
    case KernelKind::kMarginalIdentity: return "marginal-identity";
    case KernelKind::kHemisphereSymmetric: return "hemisphere-symmetric";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "squared-exponential") return KernelKind::kSquaredExponential;
  if (name == "marginal-identity") return KernelKind::kMarginalIdentity;
  if (name == "hemisphere-symmetric") return KernelKind::kHemisphereSymmetric;
  throw_config("unknown kernel kind '" + name + "'");
}

Mat build_kernel(const Mat& coords, const KernelSpec& spec, std::size_t p) {
  const std::size_t nodes = coords.size() != 0 ? static_cast<std::size_t>(coords.rows()) : p;
  if (nodes == 0) throw_input("kernel: node count is zero");
  const auto np = static_cast<Eigen::Index>(nodes);

  switch (spec.kind) {
    case KernelKind::kSquaredExponential: {
      if (coords.size() == 0) throw_config("kernel: squared-exponential kernel needs node coordinates");
      if (coords.cols() != 3) throw_input("kernel: coordinates must have 3 columns");
      if (!coords.allFinite()) throw_input("kernel: non-finite node coordinates");
      Mat o(np, np);
      for (Eigen::Index k = 0; k < np; ++k) {
        o(k, k) = 1.0;
        for (Eigen::Index l = k + 1; l < np; ++l) {
          const double v = std::exp(-(coords.row(k) - coords.row(l)).squaredNorm() / 2.0);
          o(k, l) = v;
          o(l, k) = v;
        }
      }
      return o;
    }
    case KernelKind::kMarginalIdentity:
      return Mat::Identity(np, np);
    case KernelKind::kHemisphereSymmetric: {
      if (spec.pairs.empty()) throw_config("kernel: hemisphere-symmetric kernel needs a pair list");
      if (!(spec.pair_correlation >= 0.0 && spec.pair_correlation < 1.0))
        throw_config("kernel: pair correlation must lie in [0, 1)");
      Mat o = Mat::Identity(np, np);
      std::vector<bool> used(nodes, false);
      for (const auto& [a, b] : spec.pairs) {
        if (a >= nodes || b >= nodes || a == b) throw_config("kernel: invalid node pair");
        if (used[a] || used[b]) throw_config("kernel: node listed in more than one pair");
        used[a] = used[b] = true;
        o(a, b) = spec.pair_correlation;
        o(b, a) = spec.pair_correlation;
      }
      return o;
    }
  }
  throw_config("kernel: unsupported kind");
}

EigenPair eigendecompose(const Mat& O) {
  if (O.rows() != O.cols()) throw_input("eigendecompose: matrix is not square");
  Eigen::SelfAdjointEigenSolver<Mat> solver(O);
  if (solver.info() != Eigen::Success) {
    Eigen::JacobiSVD<Mat> svd(O);
    const auto& s = svd.singularValues();
    std::ostringstream os;
    os << "eigendecompose: decomposition did not converge (P=" << O.rows()
       << ", condition estimate " << s[0] / s[s.size() - 1] << ")";
    throw_numerical(os.str());
  }
  const auto p = O.rows();
  EigenPair out;
  out.d.resize(p);
  out.U.resize(p, p);
  // Eigen returns ascending eigenvalues with eigenvectors as columns.
  for (Eigen::Index k = 0; k < p; ++k) {
    out.d[k] = solver.eigenvalues()[p - 1 - k];
    out.U.row(k) = solver.eigenvectors().col(p - 1 - k).transpose();
  }
  return out;
}

bool check_pd_constraint(double rho, double delta, double d_min) {
  return std::abs(rho) / delta <= d_min;
}

double default_delta(double d_min) { return std::max(10.0, std::ceil(1.0 / d_min)); }

Vec PriorStructure::delta_rho(double rho) const {
  const double c = rho * rho / (delta * delta);
  return (d.array().square() - c).inverse().matrix();
}

double PriorStructure::field_quadratic(const Vec& g, const Vec& t, double rho) const {
  const Vec dr = delta_rho(rho);
  const double c = rho / delta;
  double out = 0.0;
  for (Eigen::Index k = 0; k < d.size(); ++k)
    out += dr[k] * (d[k] * (g[k] * g[k] + t[k] * t[k]) - 2.0 * c * g[k] * t[k]);
  return out;
}

double PriorStructure::log_det_term(double rho) const {
  const double c = rho * rho / (delta * delta);
  double out = 0.0;
  for (Eigen::Index k = 0; k < d.size(); ++k) out += std::log(d[k] * d[k] - c);
  return out;
}

bool PriorStructure::feasible(double rho) const {
  if (!(std::abs(rho) < 1.0)) return false;
  const double dm = d_min();
  return dm * dm - rho * rho / (delta * delta) > 0.0;
}

PriorStructure make_prior_structure(const Mat& coords, const KernelSpec& spec, std::size_t p, double delta) {
  PriorStructure ps;
  ps.O = build_kernel(coords, spec, p);
  auto eig = eigendecompose(ps.O);
  const double floor = 1e-10 * eig.d[0];
  std::size_t floored = 0;
  for (Eigen::Index k = 0; k < eig.d.size(); ++k) {
    if (eig.d[k] < floor) {
      eig.d[k] = floor;
      ++floored;
    }
  }
  if (floored > 0)
    warn("kernel: " + std::to_string(floored) + " eigenvalue(s) floored at 1e-10 * d_max");
  ps.U = std::move(eig.U);
  ps.d = std::move(eig.d);
  ps.delta = delta > 0.0 ? delta : default_delta(ps.d_min());
  return ps;
}

Mat joint_covariance(const Mat& O, double rho, double delta, double sigma) {
  const auto p = O.rows();
  Mat cov(2 * p, 2 * p);
  cov.setZero();
  cov.topLeftCorner(p, p) = sigma * O;
  cov.bottomRightCorner(p, p) = sigma * O;
  const double c = rho * sigma / delta;
  for (Eigen::Index k = 0; k < p; ++k) {
    cov(k, p + k) = c;
    cov(p + k, k) = c;
  }
  return cov;
}

}  // namespace jnnts
