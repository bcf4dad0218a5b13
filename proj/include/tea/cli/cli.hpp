// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace tea::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitMissingInput = 2,
  kExitEmptyData = 3,
  kExitNumerical = 4,
  kExitIncompatible = 5,
};

/// Effective run configuration: flat string keys, echoed into every artifact.
using Config = std::map<std::string, std::string>;

/// Parses `key = value` lines; '#' starts a comment line, blank lines are
/// skipped, '-' in keys is read as '_'. Throws MissingInput or ParseError.
Config read_config_file(const std::filesystem::path& path);

/// Maps a library exception to the process exit code.
int exit_code_for(const std::exception& e);

/// Runs `tea <args>` (args exclude the program name) and returns the exit
/// code. Diagnostics go to `err`, progress and results to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tea::cli
