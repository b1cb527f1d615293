#pragma once

#include "mfg/config.hpp"
#include "mfg/report.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mfg {

enum ExitCode : int { kExitOk = 0, kExitContract = 1, kExitConfig = 2, kExitIo = 3 };

const std::vector<std::string>& subcommand_names();

struct RunResult {
  int exit_code = kExitOk;
  std::filesystem::path directory;  ///< where report.json and CSVs were written
  Json report;
};

/// Runs one subcommand and writes its artifacts under a fresh timestamped
/// directory of out_root. Progress and timings go to log.
RunResult run_subcommand(const std::string& name, const RunConfig& cfg,
                         const std::filesystem::path& out_root, std::ostream& log);

/// Command-line entry point.
int cli_main(int argc, char** argv);

}  // namespace mfg
