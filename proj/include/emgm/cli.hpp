#pragma once

#include <iosfwd>

namespace emgm {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2, kExitNumeric = 3 };

/// Parses argv (argv[0] is the program name), runs one subcommand and writes
/// its output files. The one-line summary goes to `out`; errors and usage to `err`.
///
/// Settings resolve in three layers: built-in defaults, then the JSON file
/// named by --config (a flat object whose keys are the flag names without the
/// leading dashes), then flags given on the command line.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace emgm
