#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace illiq {

/// Parse argv, run one subcommand (check | solve | dual | bounds | value |
/// swap | report), emit the Report on `out` and errors on `err`.  Returns 0
/// on success, 2 on usage or model-file errors, 3 on solver failures.  The
/// ILLIQ_CONFIG environment variable may name a JSON file with tolerance
/// overrides ({"tol": x}); explicit flags win over it.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Test harness entry: args without the program name.
int run_command(const std::vector<std::string>& args, std::string& out, std::string& err);

}  // namespace illiq
