#pragma once

#include <string>
#include <vector>

namespace segbias {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. argv[0] is the program name. Errors are reported as
/// one line on stderr ("segbias: error: <category>: <message>"); usage
/// errors are followed by the relevant help text.
int cli_dispatch(int argc, const char* const* argv);

/// Same, with the arguments after the program name.
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace segbias
