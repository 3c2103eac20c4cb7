#ifndef OPFUNC_TOOLS_CLI_HPP
#define OPFUNC_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace opfunc::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;  // a verdict, cross-check or monitor failed
inline constexpr int kInputError = 2;   // usage, file, parse or config errors
inline constexpr int kDomainError = 3;  // precondition violations

/// Runs the command line `args` (without the program name) in-process.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Relative tolerance for cross-checks: OPFUNC_TOL when set, else 1e-8.
double check_tolerance();

}  // namespace opfunc::cli

#endif  // OPFUNC_TOOLS_CLI_HPP
