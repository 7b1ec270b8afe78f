#include "jnnts/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "jnnts/error.hpp"
#include "jnnts/prior.hpp"

namespace jnnts {

namespace {

// Files written so far; removed again if the command fails.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    }
  }

  fs::path add(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }

  void add_all(const DatasetPaths& d) {
    for (const auto* p : {&d.y, &d.W, &d.X, &d.Z, &d.coords})
      if (!p->empty()) files_.push_back(*p);
  }

  void rollback() noexcept {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  const fs::path& dir() const { return dir_; }
  const std::vector<fs::path>& files() const { return files_; }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  std::vector<fs::path> files_;
};

Json envelope(const RunConfig& config, Command c) {
  return {{"command", command_name(c)}, {"seed", config.seed}, {"config", to_json(config)}};
}

Dataset load_required(const DatasetPaths& paths, const char* what) {
  if (paths.empty()) throw_config(std::string("configuration has no '") + what + "' dataset");
  return load_dataset(paths);
}

std::string chain_stem(std::size_t k) { return "chain_" + std::to_string(k); }

CommandResult simulate(const RunConfig& config, Artifacts& out) {
  ScenarioSpec spec = config.has_scenario ? config.scenario : default_scenario(Scenario::kCoupled);
  spec.seed = config.seed;
  const ScenarioData data = generate_scenario(spec);
  out.add_all(save_dataset(data.train, out.dir(), "train_"));
  out.add_all(save_dataset(data.validation, out.dir(), "validation_"));
  out.add_all(save_dataset(data.test, out.dir(), "test_"));
  Json truth = envelope(config, Command::kSimulate);
  truth["truth"] = to_json(data.truth);
  write_json(out.add("truth.json"), truth);

  CommandResult res;
  res.report = envelope(config, Command::kSimulate);
  res.report["scenario"] = to_json(spec);
  res.report["train_n"] = data.train.n();
  res.report["validation_n"] = data.validation.n();
  res.report["test_n"] = data.test.n();
  write_json(out.add("simulate.json"), res.report);
  return res;
}

ConvergenceReport convergence_of(const std::vector<PosteriorChain>& chains) {
  const auto mon = default_monitored_scalars();
  return gelman_rubin(std::span<const PosteriorChain>(chains), std::span<const MonitoredScalar>(mon));
}

bool can_diagnose(const std::vector<PosteriorChain>& chains) {
  return chains.size() >= 2 && chains.front().size() >= 10;
}

int strict_status(const ConvergenceReport& rep, double threshold, bool strict) {
  for (const auto& g : rep.gr_statistics)
    if (!(g.psrf <= threshold)) return strict ? static_cast<int>(ErrorCode::kNonConvergence) : 0;
  return 0;
}

CommandResult fit(const RunConfig& config, Artifacts& out, bool strict) {
  const Dataset data = load_required(config.data, "data");
  validate_config(config.model, data);
  const PriorStructure prior = make_prior_structure(data.coords, config.model.kernel, data.p(), config.model.delta);
  const auto chains = run_chains(data, prior, config.model, config.seed, config.n_iter, config.n_burn, config.chains);

  for (const auto& c : chains) {
    const std::string stem = chain_stem(c.header.chain_index);
    write_chain(out.add(stem + ".csv"), c);
    Json side = envelope(config, Command::kFit);
    side["header"] = to_json(c.header);
    side["delta"] = prior.delta;
    side["acceptance"] = {{"rho_accepted", c.rho_accepted},
                          {"lambda_accepted", c.lambda_accepted},
                          {"retained_proposals", c.retained_proposals},
                          {"final_step_rho", c.final_step_rho},
                          {"final_step_lambda", c.final_step_lambda}};
    write_json(out.add(stem + ".json"), side);
  }

  CommandResult res;
  res.report = envelope(config, Command::kFit);
  res.report["chains"] = chains.size();
  res.report["delta"] = prior.delta;
  const PosteriorChain merged = merge_chains(std::span<const PosteriorChain>(chains));
  if (merged.empty()) {
    res.report["summary"] = nullptr;
  } else {
    res.report["summary"] = to_json(summarize(merged, config.mpp_cutoff));
  }
  write_json(out.add("summary.json"), res.report);

  Json conv = envelope(config, Command::kFit);
  if (can_diagnose(chains)) {
    const ConvergenceReport rep = convergence_of(chains);
    conv["convergence"] = to_json(rep);
    res.exit_code = strict_status(rep, config.gr_threshold, strict);
  } else {
    conv["convergence"] = nullptr;
    conv["note"] = "Gelman-Rubin needs at least two chains with 10 or more retained draws";
  }
  write_json(out.add("convergence.json"), conv);
  return res;
}

CommandResult tune(const RunConfig& config, Artifacts& out) {
  const Dataset train = load_required(config.data, "data");
  const Dataset validation = load_required(config.validation, "validation");
  validate_config(config.model, train);
  const TuneResult t =
      tune_rank(train, validation, config.rank_candidates, config.model, config.seed, {config.n_iter, config.n_burn});
  CommandResult res;
  res.report = envelope(config, Command::kTune);
  res.report["tune"] = to_json(t);
  write_json(out.add("tune.json"), res.report);
  return res;
}

void write_metrics_csv(const fs::path& path, const ScenarioSpec& spec, const FitMetrics& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_input(path.string() + ": cannot open for writing");
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  f << "scenario,sigma_eps,node_sens,node_spec,edge_sens,edge_spec,r2_test,chosen_R\n";
  f << scenario_name(spec.scenario) << ',' << format_double(spec.sigma_eps) << ',' << cell(m.node_sens) << ','
    << cell(m.node_spec) << ',' << cell(m.edge_sens) << ',' << cell(m.edge_spec) << ',' << format_double(m.r2_test)
    << ',' << m.chosen_rank << '\n';
}

CommandResult evaluate(const RunConfig& config, Artifacts& out) {
  if (config.truth.empty()) throw_input("evaluate: no ground-truth file configured");
  if (!fs::exists(config.truth)) throw_input(config.truth.string() + ": ground-truth file not found");
  if (config.fit_dir.empty()) throw_config("evaluate: no fit_dir configured");
  const Dataset test = load_required(config.test, "test");
  const Json tj = read_json(config.truth);
  const GroundTruth truth = ground_truth_from_json(tj.contains("truth") ? tj.at("truth") : tj);
  const auto chains = load_fit_chains(config.fit_dir);
  const PosteriorChain merged = merge_chains(std::span<const PosteriorChain>(chains));
  if (merged.header.p != truth.spec.p) throw_input("evaluate: fit and ground truth disagree on the node count");
  const SelectionSummary s = summarize(merged, config.mpp_cutoff);
  const FitMetrics m = score(s, test, truth, merged.header.rank);

  CommandResult res;
  res.report = envelope(config, Command::kEvaluate);
  res.report["metrics"] = to_json(m);
  write_json(out.add("metrics.json"), res.report);
  write_metrics_csv(out.add("metrics.csv"), truth.spec, m);
  return res;
}

CommandResult diagnose(const RunConfig& config, Artifacts& out, bool strict) {
  std::vector<PosteriorChain> chains;
  if (!config.fit_dir.empty()) {
    chains = load_fit_chains(config.fit_dir);
  } else {
    const Dataset data = load_required(config.data, "data");
    validate_config(config.model, data);
    const PriorStructure prior =
        make_prior_structure(data.coords, config.model.kernel, data.p(), config.model.delta);
    chains = run_chains(data, prior, config.model, config.seed, config.n_iter, config.n_burn, config.chains);
  }
  const ConvergenceReport rep = convergence_of(chains);

  // One trace file per monitored scalar: iteration, then one column per chain.
  for (const auto& mon : default_monitored_scalars()) {
    const auto len = static_cast<Eigen::Index>(chains.front().size());
    Mat t(len, static_cast<Eigen::Index>(chains.size() + 1));
    std::vector<std::string> header{"iteration"};
    for (std::size_t c = 0; c < chains.size(); ++c) {
      header.push_back("chain_" + std::to_string(chains[c].header.chain_index));
      for (Eigen::Index i = 0; i < len; ++i)
        t(i, static_cast<Eigen::Index>(c + 1)) = mon.extract(chains[c].draws[static_cast<std::size_t>(i)]);
    }
    const double first = static_cast<double>(chains.front().header.n_burn);
    for (Eigen::Index i = 0; i < len; ++i) t(i, 0) = first + static_cast<double>(i) + 1.0;
    write_table(out.add("trace_" + mon.name + ".csv"), t, header);
  }

  CommandResult res;
  res.report = envelope(config, Command::kDiagnose);
  res.report["threshold"] = config.gr_threshold;
  res.report["convergence"] = to_json(rep);
  res.exit_code = strict_status(rep, config.gr_threshold, strict);
  res.report["converged"] = strict_status(rep, config.gr_threshold, true) == 0;
  write_json(out.add("convergence.json"), res.report);
  return res;
}

}  // namespace

std::vector<PosteriorChain> load_fit_chains(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw_input(dir.string() + ": fit directory not found");
  std::vector<PosteriorChain> chains;
  for (std::size_t k = 0;; ++k) {
    const fs::path side = dir / (chain_stem(k) + ".json");
    if (!fs::exists(side)) break;
    const Json j = read_json(side);
    if (!j.contains("header")) throw_input(side.string() + ": missing chain header");
    PosteriorChain c = read_chain(dir / (chain_stem(k) + ".csv"), chain_header_from_json(j.at("header")));
    if (j.contains("acceptance")) {
      const Json& a = j.at("acceptance");
      c.rho_accepted = a.value("rho_accepted", std::size_t{0});
      c.lambda_accepted = a.value("lambda_accepted", std::size_t{0});
      c.retained_proposals = a.value("retained_proposals", std::size_t{0});
      c.final_step_rho = a.value("final_step_rho", 0.0);
      c.final_step_lambda = a.value("final_step_lambda", 0.0);
    }
    chains.push_back(std::move(c));
  }
  if (chains.empty()) throw_input(dir.string() + ": no chain files (chain_0.json) found");
  return chains;
}

CommandResult run_command(Command command, const RunConfig& config, bool strict) {
  validate_run_config(config);
  Artifacts out(config.output_dir);
  try {
    CommandResult res;
    switch (command) {
      case Command::kSimulate: res = simulate(config, out); break;
      case Command::kFit: res = fit(config, out, strict); break;
      case Command::kTune: res = tune(config, out); break;
      case Command::kEvaluate: res = evaluate(config, out); break;
      case Command::kDiagnose: res = diagnose(config, out, strict); break;
    }
    res.artifacts = out.files();
    return res;
  } catch (...) {
    out.rollback();
    throw;
  }
}

}  // namespace jnnts
