#pragma once

#include <string>
#include <vector>

namespace depstat {

// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitInvalid = 2, kExitInconclusive = 3 };

// Entry point of the `depstat` executable.
int run_cli(int argc, char** argv);

// Subcommand names in help order.
std::vector<std::string> cli_commands();

// Default configuration of a subcommand, as JSON text.
std::string default_config(const std::string& command);

}  // namespace depstat
