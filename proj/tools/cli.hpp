#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crowdsched::cli {

/// Process exit codes.
enum ExitCode : int {
    ok = 0,
    failure = 1,        // threshold violated, training diverged
    io_error = 2,       // unreadable input or unwritable output
    schema_error = 3,   // bad columns, rows, ids or configuration
    model_mismatch = 4, // model file header, version or layout
    infeasible = 5,     // cyclic dependencies or no feasible schedule
    guard_refused = 6,  // instance too large for the exhaustive oracle
};

/// Runs one subcommand; `args` excludes the program name.
auto run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) -> int;

} // namespace crowdsched::cli
