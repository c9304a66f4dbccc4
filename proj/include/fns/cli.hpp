#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fns {

/// Entry point of the `fns` tool. Subcommands: dataset, lfa, train, solve,
/// sweep, verify, flow. Returns 0 on success, 1 on invalid flags or
/// configuration (usage on err), 2 on runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// Same with the arguments after the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fns
