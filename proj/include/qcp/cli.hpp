#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qcp::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kRuntimeFailure = 2, kCheckViolation = 3 };

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Outputs go to --out, else $QCP_OUT_DIR, else the config's
/// "out" key, else ./qcp_out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace qcp::cli
