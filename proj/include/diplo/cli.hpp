#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace diplo::cli {

/// Process exit statuses.
enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericalError = 3,
};

/// Runs one subcommand (synth, label, train, eval, ablate). `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads `key=value` lines; blank lines and lines starting with '#' are ignored.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

}  // namespace diplo::cli
