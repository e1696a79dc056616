#ifndef RMPA_CLI_HPP
#define RMPA_CLI_HPP

#include <string>
#include <vector>

namespace rmpa::cli {

//! Full command-line entry point. Exit codes: 0 success, 1 robust
//! infeasibility (or verification failure), 2 input error, 3 iteration
//! limit.
int run(int argc, const char* const* argv);

//! Same, for in-process invocation (tests); `args` excludes the program
//! name.
int run(const std::vector<std::string>& args);

}  // namespace rmpa::cli

#endif
