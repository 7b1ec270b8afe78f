#include "jnnts/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "jnnts/error.hpp"
#include "jnnts/prior.hpp"
#include "jnnts/truncnorm.hpp"

namespace jnnts {

const char* scenario_name(Scenario s) noexcept {
  switch (s) {
    case Scenario::kCoupled: return "S1-coupled";
    case Scenario::kDecoupled: return "S2-decoupled";
    case Scenario::kEdgeRemoved: return "S3-edge-removed";
    case Scenario::kMixedHighDim: return "S4-mixed-highdim";
    case Scenario::kCustom: return "custom";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::kCoupled, Scenario::kDecoupled, Scenario::kEdgeRemoved, Scenario::kMixedHighDim,
                     Scenario::kCustom})
    if (name == scenario_name(s)) return s;
  if (name == "S1") return Scenario::kCoupled;
  if (name == "S2") return Scenario::kDecoupled;
  if (name == "S3") return Scenario::kEdgeRemoved;
  if (name == "S4") return Scenario::kMixedHighDim;
  throw_config("unknown scenario '" + name + "'");
}

namespace {

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> v(hi - lo);
  std::iota(v.begin(), v.end(), lo);
  return v;
}

std::vector<Edge> clique_edges(const std::vector<std::vector<std::size_t>>& subs,
                               const std::vector<Edge>& removed) {
  std::set<Edge> edges;
  for (const auto& s : subs)
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = a + 1; b < s.size(); ++b) edges.insert(std::minmax(s[a], s[b]));
  for (const auto& e : removed) edges.erase(std::minmax(e.first, e.second));
  return {edges.begin(), edges.end()};
}

}  // namespace

ScenarioSpec default_scenario(Scenario s, double sigma_eps, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.scenario = s;
  spec.sigma_eps = sigma_eps;
  spec.seed = seed;
  spec.true_subnetworks = {range(0, 5), range(5, 10)};
  spec.true_nodes = range(0, 10);
  switch (s) {
    case Scenario::kCoupled:
    case Scenario::kCustom:
      break;
    case Scenario::kDecoupled:
      spec.true_nodes = range(10, 20);
      break;
    case Scenario::kEdgeRemoved:
      spec.removed_edges = {{5, 6}, {7, 8}};
      break;
    case Scenario::kMixedHighDim:
      spec.p = 100;
      spec.n = 1000;
      spec.true_subnetworks = {range(0, 6), range(50, 56)};
      break;
  }
  return spec;
}

void validate_scenario(const ScenarioSpec& spec) {
  if (spec.p < 2) throw_config("scenario needs at least 2 nodes");
  if (spec.n < 2) throw_config("scenario needs at least 2 training subjects");
  if (!(spec.sigma_eps >= 0.0) || !std::isfinite(spec.sigma_eps)) throw_config("sigma_eps must be >= 0");
  if (!(spec.validation_fraction >= 0.0 && spec.validation_fraction < 1.0))
    throw_config("validation_fraction must lie in [0, 1)");
  if (!(spec.x_correlation >= 0.0 && spec.x_correlation < 1.0)) throw_config("x_correlation must lie in [0, 1)");
  if (spec.true_subnetworks.size() != 2) throw_config("scenario needs exactly 2 true sub-networks");
  auto check = [&](std::size_t k, const char* what) {
    if (k >= spec.p)
      throw_config(std::string(what) + " node " + std::to_string(k) + " outside 0.." + std::to_string(spec.p - 1));
  };
  for (auto k : spec.true_nodes) check(k, "true");
  for (const auto& s : spec.true_subnetworks)
    for (auto k : s) check(k, "sub-network");
  for (const auto& e : spec.removed_edges) {
    check(e.first, "removed-edge");
    check(e.second, "removed-edge");
    if (e.first == e.second) throw_config("removed edge joins a node to itself");
  }
}

Mat grid_coordinates(std::size_t p) {
  auto side = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(p))));
  while (side * side * side < p) ++side;
  Mat c(static_cast<Eigen::Index>(p), 3);
  for (std::size_t k = 0; k < p; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    c(i, 0) = static_cast<double>(k % side);
    c(i, 1) = static_cast<double>((k / side) % side);
    c(i, 2) = static_cast<double>(k / (side * side));
  }
  return c;
}

namespace {

Dataset draw_subjects(std::size_t n, const ScenarioSpec& spec, const Mat& coords, Rng& rng) {
  const auto nn = static_cast<Eigen::Index>(n);
  const auto np = static_cast<Eigen::Index>(spec.p);
  Dataset d;
  d.W = Mat::Ones(nn, 1);
  d.X.resize(nn, np);
  const double a = std::sqrt(1.0 - spec.x_correlation), b = std::sqrt(spec.x_correlation);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const double common = spec.x_correlation > 0.0 ? sample_normal(rng, 0.0, 1.0) : 0.0;
    for (Eigen::Index k = 0; k < np; ++k) d.X(i, k) = a * sample_normal(rng, 0.0, 1.0) + b * common;
  }
  d.Z.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Mat z = Mat::Zero(np, np);
    for (Eigen::Index k = 0; k < np; ++k)
      for (Eigen::Index l = k + 1; l < np; ++l) z(k, l) = z(l, k) = sample_normal(rng, 0.0, 1.0);
    d.Z.push_back(std::move(z));
  }
  d.coords = coords;
  d.y = Vec::Zero(nn);
  return d;
}

Vec draw_noise(std::size_t n, double variance, Rng& rng) {
  Vec e(static_cast<Eigen::Index>(n));
  for (auto& v : e) v = variance > 0.0 ? sample_normal(rng, 0.0, variance) : 0.0;
  return e;
}

}  // namespace

ScenarioData generate_scenario(const ScenarioSpec& spec) {
  validate_scenario(spec);
  Rng rng = make_rng(spec.seed, 0x5ce7a810ULL);
  const auto np = static_cast<Eigen::Index>(spec.p);

  ScenarioData out;
  GroundTruth& t = out.truth;
  t.spec = spec;
  t.gamma.resize(np);
  t.theta.resize(np);
  for (auto& v : t.gamma) v = sample_normal(rng, 0.0, 2.0);
  for (auto& v : t.theta) v = sample_normal(rng, 0.0, 2.0);
  t.coefficients.eta = Vec::Ones(1);
  t.coefficients.beta = Vec::Zero(np);
  for (auto k : spec.true_nodes) {
    const auto i = static_cast<Eigen::Index>(k);
    t.coefficients.beta[i] = sample_normal(rng, t.gamma[i], 1.0);
  }
  t.coefficients.alpha = Mat::Zero(np, 2);
  for (Eigen::Index r = 0; r < 2; ++r)
    for (auto k : spec.true_subnetworks[static_cast<std::size_t>(r)]) {
      const auto i = static_cast<Eigen::Index>(k);
      t.coefficients.alpha(i, r) = sample_normal(rng, t.theta[i], 2.0);
    }
  t.signal_matrix = t.coefficients.network_matrix();
  for (const auto& e : spec.removed_edges) {
    const auto a = static_cast<Eigen::Index>(e.first), b = static_cast<Eigen::Index>(e.second);
    t.signal_matrix(a, b) = t.signal_matrix(b, a) = 0.0;
  }
  t.true_edges = clique_edges(spec.true_subnetworks, spec.removed_edges);

  const Mat coords = grid_coordinates(spec.p);
  Dataset all = draw_subjects(spec.n, spec, coords, rng);
  Dataset test = draw_subjects(spec.n_test, spec, coords, rng);
  const Vec noise_all = draw_noise(spec.n, spec.sigma_eps, rng);
  t.noise_test = draw_noise(spec.n_test, spec.sigma_eps, rng);

  auto fill = [&](Dataset& d, const Vec& noise) {
    d.y = predict_with_matrix(d, t.coefficients.eta, t.coefficients.beta, t.signal_matrix) + noise;
  };
  fill(test, t.noise_test);

  // Random validation split of the training subjects.
  std::vector<std::size_t> order(spec.n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(spec.n)));
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  auto subset = [&](const std::vector<std::size_t>& idx, Vec& noise) {
    Dataset d;
    const auto m = static_cast<Eigen::Index>(idx.size());
    d.W = Mat::Ones(m, 1);
    d.X.resize(m, np);
    noise.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto i = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]);
      d.X.row(j) = all.X.row(i);
      d.Z.push_back(all.Z[static_cast<std::size_t>(i)]);
      noise[j] = noise_all[i];
    }
    d.coords = coords;
    d.y = Vec::Zero(m);
    fill(d, noise);
    return d;
  };
  out.train = subset(train_idx, t.noise_train);
  out.validation = subset(val_idx, t.noise_validation);
  out.test = std::move(test);
  return out;
}

double r_squared(const Vec& y, const Vec& prediction) {
  if (y.size() != prediction.size()) throw_input("R^2: outcome and prediction lengths differ");
  if (y.size() < 2) throw_input("R^2 undefined for fewer than 2 subjects");
  const double sst = (y.array() - y.mean()).square().sum();
  if (!(sst > 0.0)) throw_input("R^2 undefined: outcome has zero variance");
  return 1.0 - (y - prediction).squaredNorm() / sst;
}

TuneResult tune_rank(const Dataset& train, const Dataset& validation, std::vector<std::size_t> candidates,
                     const ModelConfig& config, std::uint64_t seed, RunLength length) {
  if (candidates.empty()) throw_config("rank candidate set is empty");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  TuneResult res;
  res.candidates = candidates;
  if (candidates.size() == 1) {
    res.chosen_rank = candidates.front();
    res.validation_r2.push_back(std::nan(""));
    return res;
  }
  if (validation.n() < 2) throw_input("R^2 undefined for a validation set of fewer than 2 subjects");
  const PriorStructure prior = make_prior_structure(train.coords, config.kernel, train.p(), config.delta);
  double best = -kInf;
  for (std::size_t r : candidates) {
    ModelConfig c = config;
    c.rank = r;
    try {
      const PosteriorChain chain = run_chain(train, prior, c, seed, length.n_iter, length.n_burn);
      const SelectionSummary s = summarize(chain);
      const double r2 = r_squared(validation.y, predict_posterior_mean(validation, s));
      res.validation_r2.push_back(r2);
      if (r2 > best) {
        best = r2;
        res.chosen_rank = r;
      }
    } catch (const Error& e) {
      throw Error(e.code(), "rank candidate " + std::to_string(r) + ": " + e.what());
    }
  }
  return res;
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

FitMetrics score_selection(const std::vector<std::size_t>& selected_nodes, const std::vector<Edge>& selected_edges,
                           const GroundTruth& truth) {
  const std::size_t p = truth.spec.p;
  FitMetrics m;
  std::vector<uint8_t> truth_node(p, 0), sel_node(p, 0);
  for (auto k : truth.spec.true_nodes) truth_node[k] = 1;
  for (auto k : selected_nodes) sel_node.at(k) = 1;
  std::size_t tp = 0, tn = 0, pos = 0, neg = 0;
  for (std::size_t k = 0; k < p; ++k) {
    if (truth_node[k]) {
      ++pos;
      tp += sel_node[k];
    } else {
      ++neg;
      tn += 1 - sel_node[k];
    }
  }
  m.node_sens = ratio(tp, pos);
  m.node_spec = ratio(tn, neg);

  std::set<Edge> t_edges, s_edges;
  for (const auto& e : truth.true_edges) t_edges.insert(std::minmax(e.first, e.second));
  for (const auto& e : selected_edges) s_edges.insert(std::minmax(e.first, e.second));
  tp = tn = pos = neg = 0;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) {
      const bool is_true = t_edges.count({a, b}) > 0;
      const bool is_sel = s_edges.count({a, b}) > 0;
      if (is_true) {
        ++pos;
        tp += is_sel;
      } else {
        ++neg;
        tn += !is_sel;
      }
    }
  m.edge_sens = ratio(tp, pos);
  m.edge_spec = ratio(tn, neg);
  return m;
}

FitMetrics score(const SelectionSummary& summary, const Dataset& test, const GroundTruth& truth,
                 std::size_t chosen_rank) {
  FitMetrics m = score_selection(summary.selected_nodes, summary.selected_edges, truth);
  m.r2_test = r_squared(test.y, predict_posterior_mean(test, summary));
  m.chosen_rank = chosen_rank;
  return m;
}

}  // namespace jnnts
