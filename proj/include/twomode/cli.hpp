#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace twomode::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    /// Bad usage, unknown keys, invalid values.
    kExitConfig = 2,
    /// More than 10% of scan rows failed, or a computation could not converge.
    kExitNumerical = 3,
};

/// Runs the tool with `args` (without the program name). Tables go to the
/// --out file or to `out`; diagnostics and warnings go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Version string embedded in every table header.
const char* version();

} // namespace twomode::cli
