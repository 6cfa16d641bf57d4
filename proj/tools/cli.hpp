#pragma once

#include <string>
#include <vector>

namespace mrg::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kCheckFailure = 3 };

/// Runs one `mrg` command. `args` excludes the program name.
int run_cli(std::vector<std::string> args);

}  // namespace mrg::cli
