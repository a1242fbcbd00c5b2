// Command-line front end: solve, benchmark, oracle, generate.
#pragma once

#include <string>
#include <vector>

namespace rvopt {

/// `args` excludes the program name.
/// Exit codes: 0 success, 1 solver did not converge (artifacts still written),
/// 2 bad arguments, unreadable instance or oracle limits exceeded.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace rvopt
