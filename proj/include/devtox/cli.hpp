#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace devtox {

// Entry point of the `devtox` tool. Subcommands: simulate, fit, risk, corr,
// predict, compare, diagnose. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace devtox
