#include "jnnts/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jnnts/error.hpp"

namespace jnnts {

namespace {

void require_draws(const PosteriorChain& chain, const char* what) {
  if (chain.empty()) throw_diagnostic(std::string(what) + ": chain has no retained draws");
}

std::size_t p_of(const PosteriorChain& chain) { return chain.node_indicators.front().size(); }

std::size_t rank_of(const PosteriorChain& chain) {
  return chain.network_indicators.front().size() / p_of(chain);
}

double jaccard(const Mask& a, std::size_t ra, const std::vector<uint8_t>& ref, std::size_t p) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t k = 0; k < p; ++k) {
    const bool x = a[ra * p + k] != 0;
    const bool y = ref[k] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Majority supports of each slot under the current labeling.
std::vector<std::vector<uint8_t>> reference_supports(const PosteriorChain& chain,
                                                     const std::vector<std::vector<std::size_t>>& perm) {
  const std::size_t p = p_of(chain), rank = rank_of(chain), n = chain.size();
  std::vector<std::vector<double>> freq(rank, std::vector<double>(p, 0.0));
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = 0; s < rank; ++s)
      for (std::size_t k = 0; k < p; ++k) freq[s][k] += chain.network_indicators[t][perm[t][s] * p + k];
  std::vector<std::vector<uint8_t>> ref(rank, std::vector<uint8_t>(p, 0));
  for (std::size_t s = 0; s < rank; ++s)
    for (std::size_t k = 0; k < p; ++k) ref[s][k] = freq[s][k] / static_cast<double>(n) > 0.5 ? 1 : 0;
  return ref;
}

std::vector<std::size_t> best_permutation(const Mask& draw, const std::vector<std::vector<uint8_t>>& ref,
                                          std::size_t p) {
  const std::size_t rank = ref.size();
  std::vector<std::vector<double>> score(rank, std::vector<double>(rank));
  for (std::size_t s = 0; s < rank; ++s)
    for (std::size_t r = 0; r < rank; ++r) score[s][r] = jaccard(draw, r, ref[s], p);

  std::vector<std::size_t> perm(rank);
  std::iota(perm.begin(), perm.end(), 0);
  if (rank <= 6) {
    // Exhaustive; identity wins ties since it is visited first.
    std::vector<std::size_t> best = perm;
    double best_score = -1.0;
    do {
      double sc = 0.0;
      for (std::size_t s = 0; s < rank; ++s) sc += score[s][perm[s]];
      if (sc > best_score + 1e-12) {
        best_score = sc;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  // Greedy matching for large ranks.
  std::vector<bool> used_slot(rank, false), used_factor(rank, false);
  for (std::size_t step = 0; step < rank; ++step) {
    double best = -1.0;
    std::size_t bs = 0, br = 0;
    for (std::size_t s = 0; s < rank; ++s) {
      if (used_slot[s]) continue;
      for (std::size_t r = 0; r < rank; ++r) {
        if (used_factor[r]) continue;
        const double sc = score[s][r] + (s == r ? 1e-12 : 0.0);
        if (sc > best) {
          best = sc;
          bs = s;
          br = r;
        }
      }
    }
    used_slot[bs] = used_factor[br] = true;
    perm[bs] = br;
  }
  return perm;
}

}  // namespace

PosteriorChain merge_chains(std::span<const PosteriorChain> chains) {
  if (chains.empty()) throw_diagnostic("merge_chains: no chains");
  PosteriorChain out;
  out.header = chains.front().header;
  out.final_step_rho = chains.front().final_step_rho;
  out.final_step_lambda = chains.front().final_step_lambda;
  for (const auto& c : chains) {
    if (c.header.p != out.header.p || c.header.rank != out.header.rank || c.header.q != out.header.q)
      throw_diagnostic("merge_chains: chains have different dimensions");
    out.draws.insert(out.draws.end(), c.draws.begin(), c.draws.end());
    out.node_indicators.insert(out.node_indicators.end(), c.node_indicators.begin(), c.node_indicators.end());
    out.network_indicators.insert(out.network_indicators.end(), c.network_indicators.begin(),
                                  c.network_indicators.end());
    out.rho_accepted += c.rho_accepted;
    out.lambda_accepted += c.lambda_accepted;
    out.retained_proposals += c.retained_proposals;
  }
  return out;
}

Vec compute_node_mpp(const PosteriorChain& chain) {
  require_draws(chain, "node MPP");
  const std::size_t p = p_of(chain);
  Vec mpp = Vec::Zero(static_cast<Eigen::Index>(p));
  for (const auto& m : chain.node_indicators)
    for (std::size_t k = 0; k < p; ++k) mpp[static_cast<Eigen::Index>(k)] += m[k];
  return mpp / static_cast<double>(chain.size());
}

std::vector<std::vector<std::size_t>> align_factors(const PosteriorChain& chain) {
  require_draws(chain, "factor alignment");
  const std::size_t p = p_of(chain), rank = rank_of(chain), n = chain.size();
  std::vector<std::size_t> id(rank);
  std::iota(id.begin(), id.end(), 0);
  std::vector<std::vector<std::size_t>> perm(n, id);
  if (rank < 2) return perm;
  for (int pass = 0; pass < 3; ++pass) {
    const auto ref = reference_supports(chain, perm);
    bool changed = false;
    for (std::size_t t = 0; t < n; ++t) {
      auto next = best_permutation(chain.network_indicators[t], ref, p);
      if (next != perm[t]) {
        perm[t] = std::move(next);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return perm;
}

std::vector<Mat> compute_edge_mpp(const PosteriorChain& chain, bool align) {
  require_draws(chain, "edge MPP");
  const std::size_t p = p_of(chain), rank = rank_of(chain), n = chain.size();
  std::vector<std::vector<std::size_t>> perm;
  if (align) perm = align_factors(chain);
  const auto np = static_cast<Eigen::Index>(p);
  std::vector<Mat> mpp(rank, Mat::Zero(np, np));
  std::vector<std::size_t> on;
  for (std::size_t t = 0; t < n; ++t) {
    const Mask& m = chain.network_indicators[t];
    for (std::size_t s = 0; s < rank; ++s) {
      const std::size_t r = align ? perm[t][s] : s;
      on.clear();
      for (std::size_t k = 0; k < p; ++k)
        if (m[r * p + k]) on.push_back(k);
      for (std::size_t a = 0; a < on.size(); ++a)
        for (std::size_t b = a + 1; b < on.size(); ++b)
          mpp[s](static_cast<Eigen::Index>(on[a]), static_cast<Eigen::Index>(on[b])) += 1.0;
    }
  }
  for (auto& m : mpp) {
    m /= static_cast<double>(n);
    m = m.triangularView<Eigen::StrictlyUpper>().toDenseMatrix() +
        m.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().transpose();
  }
  return mpp;
}

Mat compute_union_edge_mpp(const PosteriorChain& chain) {
  require_draws(chain, "edge MPP");
  const std::size_t p = p_of(chain), rank = rank_of(chain), n = chain.size();
  const auto np = static_cast<Eigen::Index>(p);
  Mat mpp = Mat::Zero(np, np);
  Mat hit(np, np);
  std::vector<std::size_t> on;
  for (std::size_t t = 0; t < n; ++t) {
    const Mask& m = chain.network_indicators[t];
    hit.setZero();
    for (std::size_t r = 0; r < rank; ++r) {
      on.clear();
      for (std::size_t k = 0; k < p; ++k)
        if (m[r * p + k]) on.push_back(k);
      for (std::size_t a = 0; a < on.size(); ++a)
        for (std::size_t b = a + 1; b < on.size(); ++b)
          hit(static_cast<Eigen::Index>(on[a]), static_cast<Eigen::Index>(on[b])) = 1.0;
    }
    mpp += hit;
  }
  mpp /= static_cast<double>(n);
  Mat upper = mpp.triangularView<Eigen::StrictlyUpper>();
  return upper + upper.transpose();
}

SelectionSummary summarize(const PosteriorChain& chain, double cutoff) {
  require_draws(chain, "summary");
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw_config("MPP cutoff must lie in (0, 1)");
  const std::size_t p = p_of(chain), rank = rank_of(chain), n = chain.size();
  const auto np = static_cast<Eigen::Index>(p);
  const double inv_n = 1.0 / static_cast<double>(n);

  SelectionSummary s;
  s.cutoff = cutoff;
  s.draws = n;
  s.node_mpp = compute_node_mpp(chain);
  const auto perm = align_factors(chain);
  s.edge_mpp = compute_edge_mpp(chain, true);
  s.union_edge_mpp = compute_union_edge_mpp(chain);

  for (std::size_t k = 0; k < p; ++k)
    if (s.node_mpp[static_cast<Eigen::Index>(k)] > cutoff) s.selected_nodes.push_back(k);

  std::vector<std::vector<std::size_t>> supports;
  for (std::size_t r = 0; r < rank; ++r) {
    SubNetwork sub;
    std::vector<uint8_t> member(p, 0);
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a + 1; b < p; ++b)
        if (s.edge_mpp[r](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) > cutoff) {
          sub.edges.emplace_back(a, b);
          member[a] = member[b] = 1;
        }
    for (std::size_t k = 0; k < p; ++k)
      if (member[k]) sub.nodes.push_back(k);
    if (!sub.nodes.empty()) supports.push_back(sub.nodes);
    s.selected_subnetworks.push_back(std::move(sub));
  }
  s.uniqueness_verdict = verify_clique_uniqueness(supports);

  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b)
      if (s.union_edge_mpp(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) > cutoff)
        s.selected_edges.emplace_back(a, b);

  const auto nq = chain.draws.front().eta.size();
  s.eta_hat = Vec::Zero(nq);
  s.beta_hat = Vec::Zero(np);
  s.subnetwork_effects.assign(rank, Mat::Zero(np, np));
  s.network_effect = Mat::Zero(np, np);
  Vec alpha(np);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& d = chain.draws[t];
    s.eta_hat += d.eta;
    for (Eigen::Index k = 0; k < np; ++k)
      if (chain.node_indicators[t][static_cast<std::size_t>(k)]) s.beta_hat[k] += d.latent.beta_tilde[k];
    for (std::size_t sl = 0; sl < rank; ++sl) {
      const std::size_t r = perm[t][sl];
      for (Eigen::Index k = 0; k < np; ++k)
        alpha[k] = chain.network_indicators[t][r * p + static_cast<std::size_t>(k)]
                       ? d.latent.alpha_tilde(k, static_cast<Eigen::Index>(r))
                       : 0.0;
      if (alpha.isZero(0.0)) continue;
      const Mat outer = alpha * alpha.transpose();
      s.subnetwork_effects[sl] += outer;
      s.network_effect += outer;
    }
  }
  s.eta_hat *= inv_n;
  s.beta_hat *= inv_n;
  s.network_effect *= inv_n;
  for (auto& m : s.subnetwork_effects) m *= inv_n;

  // Nested edge lists at upper quantiles of the union edge MPP.
  std::vector<double> vals;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b)
      vals.push_back(s.union_edge_mpp(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
  std::sort(vals.begin(), vals.end());
  for (double q : {0.99, 0.98, 0.97}) {
    QuantileEdges qe;
    qe.quantile = q;
    if (!vals.empty()) {
      const double pos = q * static_cast<double>(vals.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, vals.size() - 1);
      qe.threshold = vals[lo] + (pos - static_cast<double>(lo)) * (vals[hi] - vals[lo]);
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a + 1; b < p; ++b) {
        const double v = s.union_edge_mpp(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (v > 0.0 && v >= qe.threshold) qe.edges.emplace_back(a, b);
      }
    s.quantile_edges.push_back(std::move(qe));
  }
  return s;
}

Vec predict_posterior_mean(const Dataset& data, const SelectionSummary& summary) {
  return predict_with_matrix(data, summary.eta_hat, summary.beta_hat, summary.network_effect);
}

std::vector<MonitoredScalar> default_monitored_scalars() {
  return {
      {"log_sigma_eps", [](const ParameterState& s) { return std::log(s.var.eps); }},
      {"lambda", [](const ParameterState& s) { return s.latent.lambda; }},
      {"rho", [](const ParameterState& s) { return s.rho; }},
      {"log_sigma_beta", [](const ParameterState& s) { return std::log(s.var.beta); }},
      {"log_sigma_alpha", [](const ParameterState& s) { return std::log(s.var.alpha); }},
      {"log_sigma_theta", [](const ParameterState& s) { return std::log(s.var.theta); }},
      {"log_sigma", [](const ParameterState& s) { return std::log(s.var.field); }},
  };
}

double ConvergenceReport::max_psrf() const {
  double m = 0.0;
  for (const auto& g : gr_statistics)
    if (std::isfinite(g.psrf)) m = std::max(m, g.psrf);
  return m;
}

ScalarDiagnostic gelman_rubin(std::span<const std::vector<double>> chains, const std::string& name) {
  if (chains.size() < 2) throw_diagnostic("Gelman-Rubin needs at least two chains");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != n) throw_diagnostic("Gelman-Rubin needs chains of equal retained length");
  if (n < 10) throw_diagnostic("Gelman-Rubin needs at least 10 retained draws per chain");
  const double m = static_cast<double>(chains.size());
  const double nn = static_cast<double>(n);

  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    const double mu = std::accumulate(c.begin(), c.end(), 0.0) / nn;
    double ss = 0.0;
    for (double v : c) ss += (v - mu) * (v - mu);
    w += ss / (nn - 1.0);
    means.push_back(mu);
  }
  w /= m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= nn / (m - 1.0);

  ScalarDiagnostic d;
  d.name = name;
  d.within = w;
  d.between = b;
  if (w <= 0.0) {
    // Constant chains: agreeing constants are converged, disagreeing ones are not.
    d.psrf = b > 0.0 ? kInf : 1.0;
    return d;
  }
  const double v = (nn - 1.0) / nn * w + (m + 1.0) / (m * nn) * b;
  d.psrf = std::sqrt(v / w);
  d.suspicious = d.psrf < std::sqrt((nn - 1.0) / nn) - 1e-6;
  return d;
}

ConvergenceReport gelman_rubin(std::span<const PosteriorChain> chains, std::span<const MonitoredScalar> monitored) {
  if (chains.size() < 2) throw_diagnostic("Gelman-Rubin needs at least two chains");
  ConvergenceReport rep;
  for (const auto& mon : monitored) {
    std::vector<std::vector<double>> series;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      std::vector<double> s;
      s.reserve(chains[c].size());
      for (const auto& d : chains[c].draws) s.push_back(mon.extract(d));
      TraceSummary ts;
      ts.name = mon.name;
      ts.chain = c;
      if (!s.empty()) {
        ts.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
        for (double v : s) ts.variance += (v - ts.mean) * (v - ts.mean);
        if (s.size() > 1) ts.variance /= static_cast<double>(s.size() - 1);
      }
      rep.trace_summaries.push_back(ts);
      series.push_back(std::move(s));
    }
    rep.gr_statistics.push_back(gelman_rubin(std::span<const std::vector<double>>(series), mon.name));
  }
  for (const auto& c : chains) {
    const double denom = c.retained_proposals == 0 ? 1.0 : static_cast<double>(c.retained_proposals);
    rep.rho_accept_rate.push_back(static_cast<double>(c.rho_accepted) / denom);
    rep.lambda_accept_rate.push_back(static_cast<double>(c.lambda_accepted) / denom);
  }
  return rep;
}

}  // namespace jnnts
