#pragma once

namespace civgraph::cli {

/// Parses the command line and runs one subcommand. Returns the process
/// exit code: 0 on success, 2 for usage, input, I/O and format errors,
/// 1 for failed checks and internal errors.
int run(int argc, char** argv);

}  // namespace civgraph::cli
