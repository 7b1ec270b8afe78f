#pragma once

#include <string>
#include <vector>

#include "jnnts/io.hpp"

namespace jnnts {

struct CommandResult {
  /// 0, or kNonConvergence when strict and a PSRF exceeds the threshold.
  int exit_code = 0;
  std::vector<fs::path> artifacts;
  Json report;
};

/// Runs one command against config.output_dir. Errors propagate as Error;
/// every file written before the failure is removed first.
CommandResult run_command(Command command, const RunConfig& config, bool strict = false);

/// Chains written by a fit into dir, in chain-index order.
std::vector<PosteriorChain> load_fit_chains(const fs::path& dir);

}  // namespace jnnts
