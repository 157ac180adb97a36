#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rntraj::cli {

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns the process exit code; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rntraj::cli
