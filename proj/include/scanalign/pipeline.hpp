#pragma once

// Stage-by-stage pipeline driver behind the scanalign command line.
//
//   ingest → dedup → align → rate → canonical → export-training → detect
//   → correct → eval-corrections;  analyze;  golden-eval
//
// Every stage reads its inputs from the work directory and writes its own
// artifacts there, so stages can be re-run independently.

#include <iosfwd>
#include <string>
#include <vector>

#include "scanalign/config.hpp"

namespace scanalign {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

/// Names of the subcommands in pipeline order.
const std::vector<std::string>& stage_names();

/// Runs one stage with an already-loaded configuration. Throws DataError
/// (or a scorer error) on failure.
void run_stage(const std::string& stage, const PipelineConfig& config, std::ostream& log);

/// Parses argv and runs the chosen subcommand; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scanalign
