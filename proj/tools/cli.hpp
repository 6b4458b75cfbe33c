#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fragilis::cli {

enum ExitCode : int { kOk = 0, kValidationError = 2, kComputationError = 3 };

// Runs one command. args[0] is the program name. Diagnostics go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// FRAGILIS_DATA_DIR if set, otherwise the bundled data directory.
std::string data_dir();

}  // namespace fragilis::cli
