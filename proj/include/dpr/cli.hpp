#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dpr::cli {

enum ExitCode : int {
    ok = 0,
    usage_error = 1,
    data_error = 2,
    numeric_error = 3,
};

/// Runs one subcommand: gen, split, train, recover, eval, compare.
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dpr::cli
