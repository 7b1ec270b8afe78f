#include "jnnts/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "jnnts/error.hpp"
#include "jnnts/prior.hpp"

namespace jnnts {

// ---------------------------------------------------------------------------
// Delimited tables

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Mat read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_input(path.string() + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw_input(path.string() + ": empty file (a header line is required)");

  std::vector<double> values;
  std::size_t cols = 0, rows = 0;
  std::string token;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t,") == std::string::npos) continue;
    ++rows;
    std::size_t col = 0, pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ',' && line[end] != ' ' && line[end] != '\t') ++end;
      token.assign(line, pos, end - pos);
      // Swallow trailing blanks and at most one comma.
      pos = end;
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      const bool comma = pos < line.size() && line[pos] == ',';
      if (comma) ++pos;
      ++col;
      const std::string where = path.string() + ": row " + std::to_string(rows) + ", column " + std::to_string(col);
      if (token.empty()) throw_input(where + ": empty field");
      double v = 0.0;
      const char* first = token.data();
      if (*first == '+') ++first;
      const auto res = std::from_chars(first, token.data() + token.size(), v);
      if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw_input(where + ": cannot parse '" + token + "' as a number");
      if (!std::isfinite(v)) throw_input(where + ": non-finite value '" + token + "'");
      values.push_back(v);
      if (comma && pos >= line.size()) throw_input(where + ": trailing delimiter");
    }
    if (rows == 1) cols = col;
    else if (col != cols)
      throw_input(path.string() + ": row " + std::to_string(rows) + " has " + std::to_string(col) +
                  " columns, expected " + std::to_string(cols));
  }
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
  return m;
}

void write_table(const fs::path& path, const Mat& table, const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_input(path.string() + ": cannot open for writing");
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    if (j) out << ',';
    if (static_cast<std::size_t>(j) < header.size()) out << header[static_cast<std::size_t>(j)];
    else out << 'v' << j;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      if (j) out << ',';
      out << format_double(table(i, j));
    }
    out << '\n';
  }
  if (!out) throw_input(path.string() + ": write failed");
}

// ---------------------------------------------------------------------------
// Datasets

const char* z_layout_name(ZLayout z) noexcept {
  switch (z) {
    case ZLayout::kAuto: return "auto";
    case ZLayout::kStacked: return "stacked";
    case ZLayout::kUpperTriangle: return "upper-triangle";
  }
  return "unknown";
}

ZLayout parse_z_layout(const std::string& name) {
  for (ZLayout z : {ZLayout::kAuto, ZLayout::kStacked, ZLayout::kUpperTriangle})
    if (name == z_layout_name(z)) return z;
  throw_config("unknown Z layout '" + name + "'");
}

namespace {

Vec as_vector(const Mat& m, const fs::path& path) {
  if (m.cols() != 1) throw_input(path.string() + ": expected a single column, found " + std::to_string(m.cols()));
  return m.col(0);
}

}  // namespace

Dataset load_dataset(const DatasetPaths& paths) {
  if (paths.y.empty() || paths.X.empty() || paths.Z.empty()) throw_input("dataset: y, X and Z paths are required");
  Dataset d;
  d.y = as_vector(read_table(paths.y), paths.y);
  const auto n = d.y.size();
  if (n == 0) throw_input(paths.y.string() + ": no rows");
  d.X = read_table(paths.X);
  if (d.X.rows() != n)
    throw_input(paths.X.string() + ": " + std::to_string(d.X.rows()) + " rows, expected " + std::to_string(n));
  const auto p = d.X.cols();

  if (paths.W.empty()) {
    d.W = Mat::Ones(n, 1);
  } else {
    Mat w = read_table(paths.W);
    if (w.rows() != n)
      throw_input(paths.W.string() + ": " + std::to_string(w.rows()) + " rows, expected " + std::to_string(n));
    if (w.cols() == 0 || !(w.col(0).array() == 1.0).all()) {
      warn(paths.W.string() + ": no leading column of ones; an intercept column was prepended");
      Mat w2(n, w.cols() + 1);
      w2.col(0).setOnes();
      w2.rightCols(w.cols()) = w;
      w = std::move(w2);
    }
    d.W = std::move(w);
  }

  const Mat z = read_table(paths.Z);
  const auto tri = p * (p - 1) / 2;
  ZLayout layout = paths.z_layout;
  if (layout == ZLayout::kAuto) {
    if (z.rows() == n * p && z.cols() == p) layout = ZLayout::kStacked;
    else if (z.rows() == n && z.cols() == tri) layout = ZLayout::kUpperTriangle;
    else
      throw_input(paths.Z.string() + ": shape " + std::to_string(z.rows()) + "x" + std::to_string(z.cols()) +
                  " matches neither N*P x P stacked blocks nor N x P(P-1)/2 upper-triangle rows");
  }
  d.Z.reserve(static_cast<std::size_t>(n));
  if (layout == ZLayout::kStacked) {
    if (z.rows() != n * p || z.cols() != p) throw_input(paths.Z.string() + ": stacked layout needs N*P rows of P columns");
    for (Eigen::Index i = 0; i < n; ++i) {
      Mat b = z.block(i * p, 0, p, p);
      for (Eigen::Index k = 0; k < p; ++k)
        for (Eigen::Index l = k + 1; l < p; ++l) {
          if (std::abs(b(k, l) - b(l, k)) > 1e-8)
            throw_input(paths.Z.string() + ": block " + std::to_string(i + 1) + " is not symmetric at row " +
                        std::to_string(i * p + k + 1) + ", column " + std::to_string(l + 1));
          b(k, l) = b(l, k) = 0.5 * (b(k, l) + b(l, k));
        }
      d.Z.push_back(std::move(b));
    }
  } else {
    if (z.rows() != n || z.cols() != tri) throw_input(paths.Z.string() + ": upper-triangle layout needs N rows of P(P-1)/2 columns");
    for (Eigen::Index i = 0; i < n; ++i) {
      Mat b = Mat::Zero(p, p);
      Eigen::Index c = 0;
      for (Eigen::Index k = 0; k < p; ++k)
        for (Eigen::Index l = k + 1; l < p; ++l, ++c) b(k, l) = b(l, k) = z(i, c);
      d.Z.push_back(std::move(b));
    }
  }

  if (!paths.coords.empty()) {
    d.coords = read_table(paths.coords);
    if (d.coords.rows() != p || d.coords.cols() != 3)
      throw_input(paths.coords.string() + ": expected " + std::to_string(p) + " rows of 3 coordinates");
  }
  validate_dataset(d);
  return d;
}

DatasetPaths save_dataset(const Dataset& data, const fs::path& dir, const std::string& prefix, ZLayout layout) {
  fs::create_directories(dir);
  DatasetPaths paths;
  paths.y = dir / (prefix + "y.csv");
  paths.W = dir / (prefix + "W.csv");
  paths.X = dir / (prefix + "X.csv");
  paths.Z = dir / (prefix + "Z.csv");
  paths.z_layout = layout == ZLayout::kAuto ? ZLayout::kStacked : layout;
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());

  write_table(paths.y, data.y, {"y"});
  std::vector<std::string> h;
  for (Eigen::Index j = 0; j < data.W.cols(); ++j) h.push_back(j == 0 ? "intercept" : "w" + std::to_string(j));
  write_table(paths.W, data.W, h);
  h.clear();
  for (Eigen::Index j = 0; j < p; ++j) h.push_back("x" + std::to_string(j));
  write_table(paths.X, data.X, h);

  if (paths.z_layout == ZLayout::kStacked) {
    Mat z(n * p, p);
    for (Eigen::Index i = 0; i < n; ++i) z.block(i * p, 0, p, p) = data.Z[static_cast<std::size_t>(i)];
    write_table(paths.Z, z, h);
  } else {
    Mat z(n, p * (p - 1) / 2);
    h.clear();
    for (Eigen::Index k = 0; k < p; ++k)
      for (Eigen::Index l = k + 1; l < p; ++l) h.push_back("z" + std::to_string(k) + "_" + std::to_string(l));
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index c = 0;
      for (Eigen::Index k = 0; k < p; ++k)
        for (Eigen::Index l = k + 1; l < p; ++l, ++c) z(i, c) = data.Z[static_cast<std::size_t>(i)](k, l);
    }
    write_table(paths.Z, z, h);
  }
  if (data.coords.size() != 0) {
    paths.coords = dir / (prefix + "coords.csv");
    write_table(paths.coords, data.coords, {"c0", "c1", "c2"});
  }
  return paths;
}

// ---------------------------------------------------------------------------
// Chain files

std::vector<std::string> chain_columns(const ChainHeader& h) {
  std::vector<std::string> c;
  auto idx = [](const char* base, std::size_t k) { return std::string(base) + "_" + std::to_string(k); };
  auto idx2 = [](const char* base, std::size_t r, std::size_t k) {
    return std::string(base) + "_" + std::to_string(r) + "_" + std::to_string(k);
  };
  for (std::size_t j = 0; j < h.q; ++j) c.push_back(idx("eta", j));
  for (std::size_t k = 0; k < h.p; ++k) c.push_back(idx("beta_tilde", k));
  for (std::size_t k = 0; k < h.p; ++k) c.push_back(idx("gamma", k));
  for (std::size_t k = 0; k < h.p; ++k) c.push_back(idx("theta", k));
  for (std::size_t r = 0; r < h.rank; ++r)
    for (std::size_t k = 0; k < h.p; ++k) c.push_back(idx2("theta_r", r, k));
  for (std::size_t r = 0; r < h.rank; ++r)
    for (std::size_t k = 0; k < h.p; ++k) c.push_back(idx2("alpha_tilde", r, k));
  for (const char* s : {"sigma_beta", "sigma_alpha", "sigma_theta", "sigma_eps", "sigma", "rho", "lambda"})
    c.emplace_back(s);
  for (std::size_t k = 0; k < h.p; ++k) c.push_back(idx("node", k));
  for (std::size_t r = 0; r < h.rank; ++r)
    for (std::size_t k = 0; k < h.p; ++k) c.push_back(idx2("net", r, k));
  return c;
}

void write_chain(const fs::path& csv, const PosteriorChain& chain) {
  const ChainHeader& h = chain.header;
  const auto cols = chain_columns(h);
  const auto p = static_cast<Eigen::Index>(h.p), nr = static_cast<Eigen::Index>(h.rank);
  Mat t(static_cast<Eigen::Index>(chain.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& s = chain.draws[i];
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < s.eta.size(); ++j) t(row, c++) = s.eta[j];
    for (Eigen::Index k = 0; k < p; ++k) t(row, c++) = s.latent.beta_tilde[k];
    for (Eigen::Index k = 0; k < p; ++k) t(row, c++) = s.latent.gamma[k];
    for (Eigen::Index k = 0; k < p; ++k) t(row, c++) = s.latent.theta[k];
    for (Eigen::Index r = 0; r < nr; ++r)
      for (Eigen::Index k = 0; k < p; ++k) t(row, c++) = s.latent.theta_r(k, r);
    for (Eigen::Index r = 0; r < nr; ++r)
      for (Eigen::Index k = 0; k < p; ++k) t(row, c++) = s.latent.alpha_tilde(k, r);
    for (double v : {s.var.beta, s.var.alpha, s.var.theta, s.var.eps, s.var.field, s.rho, s.latent.lambda})
      t(row, c++) = v;
    for (auto b : chain.node_indicators[i]) t(row, c++) = b;
    for (auto b : chain.network_indicators[i]) t(row, c++) = b;
  }
  write_table(csv, t, cols);
}

PosteriorChain read_chain(const fs::path& csv, const ChainHeader& header) {
  const Mat t = read_table(csv);
  const auto cols = chain_columns(header);
  if (t.rows() > 0 && t.cols() != static_cast<Eigen::Index>(cols.size()))
    throw_input(csv.string() + ": " + std::to_string(t.cols()) + " columns, expected " + std::to_string(cols.size()));
  PosteriorChain chain;
  chain.header = header;
  const auto p = static_cast<Eigen::Index>(header.p), nr = static_cast<Eigen::Index>(header.rank),
             q = static_cast<Eigen::Index>(header.q);
  for (Eigen::Index row = 0; row < t.rows(); ++row) {
    ParameterState s;
    Eigen::Index c = 0;
    s.eta.resize(q);
    for (Eigen::Index j = 0; j < q; ++j) s.eta[j] = t(row, c++);
    s.latent.beta_tilde.resize(p);
    for (Eigen::Index k = 0; k < p; ++k) s.latent.beta_tilde[k] = t(row, c++);
    s.latent.gamma.resize(p);
    for (Eigen::Index k = 0; k < p; ++k) s.latent.gamma[k] = t(row, c++);
    s.latent.theta.resize(p);
    for (Eigen::Index k = 0; k < p; ++k) s.latent.theta[k] = t(row, c++);
    s.latent.theta_r.resize(p, nr);
    for (Eigen::Index r = 0; r < nr; ++r)
      for (Eigen::Index k = 0; k < p; ++k) s.latent.theta_r(k, r) = t(row, c++);
    s.latent.alpha_tilde.resize(p, nr);
    for (Eigen::Index r = 0; r < nr; ++r)
      for (Eigen::Index k = 0; k < p; ++k) s.latent.alpha_tilde(k, r) = t(row, c++);
    s.var.beta = t(row, c++);
    s.var.alpha = t(row, c++);
    s.var.theta = t(row, c++);
    s.var.eps = t(row, c++);
    s.var.field = t(row, c++);
    s.rho = t(row, c++);
    s.latent.lambda = t(row, c++);
    Mask node(header.p), net(header.p * header.rank);
    for (auto& b : node) b = t(row, c++) != 0.0;
    for (auto& b : net) b = t(row, c++) != 0.0;
    chain.draws.push_back(std::move(s));
    chain.node_indicators.push_back(std::move(node));
    chain.network_indicators.push_back(std::move(net));
  }
  return chain;
}

// ---------------------------------------------------------------------------
// JSON

const char* command_name(Command c) noexcept {
  switch (c) {
    case Command::kSimulate: return "simulate";
    case Command::kFit: return "fit";
    case Command::kTune: return "tune";
    case Command::kEvaluate: return "evaluate";
    case Command::kDiagnose: return "diagnose";
  }
  return "unknown";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::kSimulate, Command::kFit, Command::kTune, Command::kEvaluate, Command::kDiagnose})
    if (name == command_name(c)) return c;
  throw_config("unknown command '" + name + "'");
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_input(path.string() + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw_input(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_input(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw_input(path.string() + ": write failed");
}

namespace {

Json vec_json(const Vec& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json mat_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

Json edges_json(const std::vector<Edge>& edges) {
  Json a = Json::array();
  for (const auto& e : edges) a.push_back({e.first, e.second});
  return a;
}

// Reads an object field by field and rejects keys it never asked for.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw_config(where_ + ": expected a JSON object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const Json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw_config(path(key) + ": expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw_config(path(key) + ": expected a number");
      }
      out = v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw_config(path(key) + ": " + e.what());
    }
  }

  void get_path(const char* key, fs::path& out, const fs::path& base) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = fs::path(s).is_absolute() || base.empty() ? fs::path(s) : base / s;
  }

  const Json* sub(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw_config("unknown configuration key '" + where_ + "." + item.key() + "'");
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_ig(const Json& j, const std::string& where, InverseGammaPrior& ig) {
  Reader r(j, where);
  r.get("shape", ig.shape);
  r.get("rate", ig.rate);
  r.finish();
}

Json ig_json(const InverseGammaPrior& ig) { return {{"shape", ig.shape}, {"rate", ig.rate}}; }

std::vector<Edge> read_edges(const Json& j, const std::string& where) {
  std::vector<Edge> edges;
  if (!j.is_array()) throw_config(where + ": expected an array of node pairs");
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned())
      throw_config(where + ": each entry must be a pair of node indices");
    edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  return edges;
}

void read_model(const Json& j, RunConfig& rc) {
  ModelConfig& m = rc.model;
  Reader r(j, "model");
  r.get("rank", m.rank);
  r.get("rank_candidates", rc.rank_candidates);
  std::string s;
  if (r.has("ablation")) {
    r.get("ablation", s);
    m.ablation = parse_ablation(s);
  }
  r.get("delta", m.delta);
  r.get("refresh_interval", m.refresh_interval);
  r.get("mpp_cutoff", rc.mpp_cutoff);
  if (const Json* k = r.sub("kernel")) {
    Reader kr(*k, "model.kernel");
    if (kr.has("kind")) {
      kr.get("kind", s);
      m.kernel.kind = parse_kernel_kind(s);
    }
    kr.get("pair_correlation", m.kernel.pair_correlation);
    if (const Json* pairs = kr.sub("pairs")) m.kernel.pairs = read_edges(*pairs, "model.kernel.pairs");
    kr.finish();
  }
  if (const Json* h = r.sub("hyperpriors")) {
    Reader hr(*h, "model.hyperpriors");
    hr.get("sigma_eta", m.hyper.sigma_eta);
    hr.get("lambda_max", m.hyper.lambda_max);
    const std::pair<const char*, InverseGammaPrior*> igs[] = {{"sigma_beta", &m.hyper.beta},
                                                               {"sigma_alpha", &m.hyper.alpha},
                                                               {"sigma_theta", &m.hyper.theta},
                                                               {"sigma_eps", &m.hyper.eps},
                                                               {"sigma", &m.hyper.field}};
    for (const auto& [key, ig] : igs)
      if (const Json* v = hr.sub(key)) read_ig(*v, hr.path(key), *ig);
    hr.finish();
  }
  if (const Json* mh = r.sub("mh")) {
    Reader mr(*mh, "model.mh");
    mr.get("step_rho", m.mh.step_rho);
    mr.get("step_lambda", m.mh.step_lambda);
    mr.get("adapt", m.mh.adapt);
    mr.get("adapt_window", m.mh.adapt_window);
    mr.get("target_accept", m.mh.target_accept);
    mr.finish();
  }
  r.finish();
}

DatasetPaths read_paths(const Json& j, const std::string& where, const fs::path& base) {
  DatasetPaths d;
  Reader r(j, where);
  r.get_path("y", d.y, base);
  r.get_path("W", d.W, base);
  r.get_path("X", d.X, base);
  r.get_path("Z", d.Z, base);
  r.get_path("coords", d.coords, base);
  if (r.has("z_layout")) {
    std::string s;
    r.get("z_layout", s);
    d.z_layout = parse_z_layout(s);
  }
  r.finish();
  if (d.y.empty() || d.X.empty() || d.Z.empty()) throw_config(where + ": y, X and Z paths are required");
  return d;
}

Json paths_json(const DatasetPaths& d) {
  Json j = {{"y", d.y.string()}, {"X", d.X.string()}, {"Z", d.Z.string()}, {"z_layout", z_layout_name(d.z_layout)}};
  if (!d.W.empty()) j["W"] = d.W.string();
  if (!d.coords.empty()) j["coords"] = d.coords.string();
  return j;
}

ScenarioSpec read_scenario(const Json& j) {
  Reader r(j, "scenario");
  std::string name = scenario_name(Scenario::kCoupled);
  r.get("scenario", name);
  double sigma = 2.0;
  r.get("sigma_eps", sigma);
  ScenarioSpec s = default_scenario(parse_scenario(name), sigma);
  r.get("p", s.p);
  r.get("n", s.n);
  r.get("n_test", s.n_test);
  r.get("validation_fraction", s.validation_fraction);
  r.get("x_correlation", s.x_correlation);
  r.get("true_nodes", s.true_nodes);
  r.get("true_subnetworks", s.true_subnetworks);
  if (const Json* e = r.sub("removed_edges")) s.removed_edges = read_edges(*e, "scenario.removed_edges");
  r.finish();
  return s;
}

}  // namespace

void validate_run_config(const RunConfig& c) {
  if (c.chains == 0) throw_config("chains must be at least 1");
  if (c.n_iter == 0) throw_config("n_iter must be positive");
  if (c.n_burn >= c.n_iter) throw_config("n_burn must be smaller than n_iter");
  if (!(c.mpp_cutoff > 0.0 && c.mpp_cutoff < 1.0)) throw_config("mpp_cutoff must lie in (0, 1)");
  if (!(c.gr_threshold > 1.0)) throw_config("gr_threshold must exceed 1");
  if (c.rank_candidates.empty()) throw_config("rank_candidates must not be empty");
  const bool needs_network = c.model.ablation != Ablation::kNodeOnly;
  if (needs_network && c.model.rank == 0) throw_config("rank must be at least 1 unless the network component is ablated");
  for (auto r : c.rank_candidates)
    if (r == 0) throw_config("rank candidates must be at least 1");
}

RunConfig run_config_from_json(const Json& j, const fs::path& base_dir) {
  RunConfig c;
  Reader r(j, "config");
  if (r.has("command")) {
    std::string s;
    r.get("command", s);
    parse_command(s);
  }
  r.get("seed", c.seed);
  r.get("chains", c.chains);
  r.get("n_iter", c.n_iter);
  r.get("n_burn", c.n_burn);
  r.get_path("output_dir", c.output_dir, base_dir);
  if (const Json* m = r.sub("model")) read_model(*m, c);
  if (const Json* d = r.sub("data")) c.data = read_paths(*d, "data", base_dir);
  if (const Json* d = r.sub("validation")) c.validation = read_paths(*d, "validation", base_dir);
  if (const Json* d = r.sub("test")) c.test = read_paths(*d, "test", base_dir);
  r.get_path("truth", c.truth, base_dir);
  r.get_path("fit_dir", c.fit_dir, base_dir);
  if (const Json* s = r.sub("scenario")) {
    c.scenario = read_scenario(*s);
    c.has_scenario = true;
  }
  if (const Json* d = r.sub("diagnostics")) {
    Reader dr(*d, "diagnostics");
    dr.get("gr_threshold", c.gr_threshold);
    dr.finish();
  }
  r.finish();
  c.scenario.seed = c.seed;
  validate_run_config(c);
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  Json j;
  try {
    j = read_json(path);
  } catch (const Error& e) {
    throw_config(e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

Json to_json(const ModelConfig& m) {
  Json pairs = Json::array();
  for (const auto& e : m.kernel.pairs) pairs.push_back({e.first, e.second});
  return {
      {"rank", m.rank},
      {"ablation", ablation_name(m.ablation)},
      {"delta", m.delta},
      {"refresh_interval", m.refresh_interval},
      {"kernel",
       {{"kind", kernel_kind_name(m.kernel.kind)}, {"pair_correlation", m.kernel.pair_correlation}, {"pairs", pairs}}},
      {"hyperpriors",
       {{"sigma_eta", m.hyper.sigma_eta},
        {"lambda_max", m.hyper.lambda_max},
        {"sigma_beta", ig_json(m.hyper.beta)},
        {"sigma_alpha", ig_json(m.hyper.alpha)},
        {"sigma_theta", ig_json(m.hyper.theta)},
        {"sigma_eps", ig_json(m.hyper.eps)},
        {"sigma", ig_json(m.hyper.field)}}},
      {"mh",
       {{"step_rho", m.mh.step_rho},
        {"step_lambda", m.mh.step_lambda},
        {"adapt", m.mh.adapt},
        {"adapt_window", m.mh.adapt_window},
        {"target_accept", m.mh.target_accept}}},
  };
}

Json to_json(const ScenarioSpec& s) {
  return {{"scenario", scenario_name(s.scenario)},
          {"p", s.p},
          {"n", s.n},
          {"n_test", s.n_test},
          {"sigma_eps", s.sigma_eps},
          {"validation_fraction", s.validation_fraction},
          {"x_correlation", s.x_correlation},
          {"true_nodes", s.true_nodes},
          {"true_subnetworks", s.true_subnetworks},
          {"removed_edges", edges_json(s.removed_edges)}};
}

Json to_json(const RunConfig& c) {
  Json model = to_json(c.model);
  model["rank_candidates"] = c.rank_candidates;
  model["mpp_cutoff"] = c.mpp_cutoff;
  Json j = {{"seed", c.seed},
            {"chains", c.chains},
            {"n_iter", c.n_iter},
            {"n_burn", c.n_burn},
            {"output_dir", c.output_dir.string()},
            {"model", model},
            {"diagnostics", {{"gr_threshold", c.gr_threshold}}}};
  if (!c.data.empty()) j["data"] = paths_json(c.data);
  if (!c.validation.empty()) j["validation"] = paths_json(c.validation);
  if (!c.test.empty()) j["test"] = paths_json(c.test);
  if (!c.truth.empty()) j["truth"] = c.truth.string();
  if (!c.fit_dir.empty()) j["fit_dir"] = c.fit_dir.string();
  if (c.has_scenario) j["scenario"] = to_json(c.scenario);
  return j;
}

Json to_json(const ChainHeader& h) {
  return {{"n", h.n},           {"p", h.p},           {"q", h.q},
          {"rank", h.rank},     {"n_iter", h.n_iter}, {"n_burn", h.n_burn},
          {"seed", h.seed},     {"chain_index", h.chain_index}, {"ablation", ablation_name(h.ablation)}};
}

ChainHeader chain_header_from_json(const Json& j) {
  ChainHeader h;
  Reader r(j, "header");
  r.get("n", h.n);
  r.get("p", h.p);
  r.get("q", h.q);
  r.get("rank", h.rank);
  r.get("n_iter", h.n_iter);
  r.get("n_burn", h.n_burn);
  r.get("seed", h.seed);
  r.get("chain_index", h.chain_index);
  std::string s = "full";
  r.get("ablation", s);
  h.ablation = parse_ablation(s);
  r.finish();
  return h;
}

Json to_json(const SelectionSummary& s) {
  Json subs = Json::array();
  for (std::size_t r = 0; r < s.selected_subnetworks.size(); ++r) {
    subs.push_back({{"factor", r},
                    {"nodes", s.selected_subnetworks[r].nodes},
                    {"edges", edges_json(s.selected_subnetworks[r].edges)},
                    {"edge_mpp", mat_json(s.edge_mpp[r])},
                    {"effect", mat_json(s.subnetwork_effects[r])}});
  }
  Json quant = Json::array();
  for (const auto& q : s.quantile_edges)
    quant.push_back({{"quantile", q.quantile}, {"threshold", q.threshold}, {"edges", edges_json(q.edges)}});
  return {{"cutoff", s.cutoff},
          {"draws", s.draws},
          {"selected_nodes", s.selected_nodes},
          {"selected_edges", edges_json(s.selected_edges)},
          {"uniqueness_verdict", clique_verdict_name(s.uniqueness_verdict)},
          {"node_mpp", vec_json(s.node_mpp)},
          {"union_edge_mpp", mat_json(s.union_edge_mpp)},
          {"subnetworks", subs},
          {"quantile_edges", quant},
          {"eta_hat", vec_json(s.eta_hat)},
          {"beta_hat", vec_json(s.beta_hat)},
          {"network_effect", mat_json(s.network_effect)}};
}

Json to_json(const ConvergenceReport& rep) {
  Json gr = Json::array();
  for (const auto& g : rep.gr_statistics)
    gr.push_back({{"name", g.name},
                  {"psrf", std::isfinite(g.psrf) ? Json(g.psrf) : Json("inf")},
                  {"within", g.within},
                  {"between", g.between},
                  {"suspicious", g.suspicious}});
  Json tr = Json::array();
  for (const auto& t : rep.trace_summaries)
    tr.push_back({{"name", t.name}, {"chain", t.chain}, {"mean", t.mean}, {"variance", t.variance}});
  return {{"max_psrf", rep.max_psrf()},
          {"gelman_rubin", gr},
          {"traces", tr},
          {"rho_accept_rate", rep.rho_accept_rate},
          {"lambda_accept_rate", rep.lambda_accept_rate}};
}

Json to_json(const FitMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json("n/a"); };
  return {{"node_sens", opt(m.node_sens)}, {"node_spec", opt(m.node_spec)}, {"edge_sens", opt(m.edge_sens)},
          {"edge_spec", opt(m.edge_spec)}, {"r2_test", m.r2_test},           {"chosen_R", m.chosen_rank}};
}

Json to_json(const TuneResult& t) {
  Json rows = Json::array();
  for (std::size_t k = 0; k < t.candidates.size(); ++k) {
    const double r2 = t.validation_r2[k];
    rows.push_back({{"R", t.candidates[k]}, {"validation_r2", std::isfinite(r2) ? Json(r2) : Json(nullptr)}});
  }
  return {{"chosen_R", t.chosen_rank}, {"validation_r2", rows}};
}

Json to_json(const GroundTruth& t) {
  return {{"spec", to_json(t.spec)},
          {"seed", t.spec.seed},
          {"gamma", vec_json(t.gamma)},
          {"theta", vec_json(t.theta)},
          {"eta", vec_json(t.coefficients.eta)},
          {"beta", vec_json(t.coefficients.beta)},
          {"alpha", mat_json(t.coefficients.alpha.transpose())},
          {"signal_matrix", mat_json(t.signal_matrix)},
          {"true_edges", edges_json(t.true_edges)},
          {"noise_train", vec_json(t.noise_train)},
          {"noise_validation", vec_json(t.noise_validation)},
          {"noise_test", vec_json(t.noise_test)}};
}

namespace {

Vec json_vec(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw_input(std::string("ground truth: missing array '") + key + "'");
  const auto v = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat json_mat(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw_input(std::string("ground truth: missing array '") + key + "'");
  const auto rows = j.at(key).get<std::vector<std::vector<double>>>();
  const auto nc = rows.empty() ? 0 : rows.front().size();
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(nc));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != nc) throw_input(std::string("ground truth: ragged matrix '") + key + "'");
    for (std::size_t k = 0; k < nc; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

}  // namespace

GroundTruth ground_truth_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("spec")) throw_input("ground truth: missing 'spec'");
  GroundTruth t;
  try {
    t.spec = read_scenario(j.at("spec"));
    t.spec.seed = j.value("seed", std::uint64_t{0});
    t.gamma = json_vec(j, "gamma");
    t.theta = json_vec(j, "theta");
    t.coefficients.eta = json_vec(j, "eta");
    t.coefficients.beta = json_vec(j, "beta");
    t.coefficients.alpha = json_mat(j, "alpha").transpose();
    t.signal_matrix = json_mat(j, "signal_matrix");
    t.true_edges = read_edges(j.at("true_edges"), "ground truth true_edges");
    t.noise_train = json_vec(j, "noise_train");
    t.noise_validation = json_vec(j, "noise_validation");
    t.noise_test = json_vec(j, "noise_test");
  } catch (const Error& e) {
    throw Error(ErrorCode::kInput, std::string("ground truth: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw_input(std::string("ground truth: ") + e.what());
  }
  return t;
}

}  // namespace jnnts
