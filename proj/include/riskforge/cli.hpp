#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace riskforge::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kOk = 0,
  kViolation = 1,  // validation errors, failed design-basis check, exceeded tolerance
  kUsage = 2,
  kInput = 3,  // parse, IO and analysis errors
  kLimit = 4,  // a configured size cap was exceeded
};

/// Runs one command. `args` excludes the program name. Data goes to `out`,
/// diagnostics to `err`.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace riskforge::cli
