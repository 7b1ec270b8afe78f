#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "jnnts/inference.hpp"
#include "jnnts/model.hpp"
#include "jnnts/sampler.hpp"
#include "jnnts/simulation.hpp"

namespace jnnts {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Delimited numeric text: one header line, then rows of comma- or
/// whitespace-separated numbers. Errors name the file, row and column
/// (1-based, data rows counted after the header).
Mat read_table(const fs::path& path);

/// Writes with a header line and the shortest round-tripping decimal form.
void write_table(const fs::path& path, const Mat& table, const std::vector<std::string>& header = {});

/// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

/// Z as N stacked P x P blocks, or one row per subject holding the strict
/// upper triangle in row-major (k < l) order.
enum class ZLayout { kAuto, kStacked, kUpperTriangle };

const char* z_layout_name(ZLayout z) noexcept;
ZLayout parse_z_layout(const std::string& name);

struct DatasetPaths {
  fs::path y, W, X, Z, coords;
  ZLayout z_layout = ZLayout::kAuto;

  bool empty() const { return y.empty(); }
};

/// Loads and cross-checks a dataset. A W without a leading ones column gets
/// one prepended (with a warning); Z asymmetry up to 1e-8 is averaged away.
Dataset load_dataset(const DatasetPaths& paths);

/// Writes <prefix>y.csv, W, X, Z and (if present) coords into dir.
DatasetPaths save_dataset(const Dataset& data, const fs::path& dir, const std::string& prefix = "",
                          ZLayout layout = ZLayout::kStacked);

/// Column names of a chain file: eta, beta_tilde, gamma, theta, theta_r
/// (factor-major), alpha_tilde (factor-major), the five variances, rho,
/// lambda, then the node and network indicator blocks.
std::vector<std::string> chain_columns(const ChainHeader& h);

void write_chain(const fs::path& csv, const PosteriorChain& chain);
PosteriorChain read_chain(const fs::path& csv, const ChainHeader& header);

enum class Command { kSimulate, kFit, kTune, kEvaluate, kDiagnose };

const char* command_name(Command c) noexcept;
Command parse_command(const std::string& name);

struct RunConfig {
  ModelConfig model;
  std::vector<std::size_t> rank_candidates{2, 3, 4, 5};
  std::size_t chains = 1;
  std::size_t n_iter = 10000;
  std::size_t n_burn = 5000;
  std::uint64_t seed = 0;
  double mpp_cutoff = 0.5;
  double gr_threshold = 1.1;
  DatasetPaths data;
  DatasetPaths validation;
  DatasetPaths test;
  fs::path truth;
  fs::path fit_dir;
  ScenarioSpec scenario;
  bool has_scenario = false;
  fs::path output_dir = "out";
};

/// Range checks that do not need data.
void validate_run_config(const RunConfig& config);

/// Relative paths are resolved against base_dir. Unknown keys are rejected.
RunConfig run_config_from_json(const Json& j, const fs::path& base_dir = {});
RunConfig load_run_config(const fs::path& path);
Json to_json(const RunConfig& config);

Json to_json(const ModelConfig& config);
Json to_json(const ScenarioSpec& spec);
Json to_json(const ChainHeader& header);
ChainHeader chain_header_from_json(const Json& j);
Json to_json(const SelectionSummary& summary);
Json to_json(const ConvergenceReport& report);
Json to_json(const FitMetrics& metrics);
Json to_json(const TuneResult& result);

Json to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const Json& j);

Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& j);

}  // namespace jnnts
