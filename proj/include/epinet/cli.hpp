#pragma once

#include <string>
#include <vector>

namespace epinet {

// Subcommands: simulate, infer, match. Exit codes: 0 success, 1 config or
// usage error, 2 runtime failure.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace epinet
