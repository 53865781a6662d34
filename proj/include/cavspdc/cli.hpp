#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cavspdc/error.hpp"

namespace cavspdc::cli {

/// Exit status for a failure category: config 2, precondition 3,
/// non-convergence 4, I/O 5.
int exit_code(ErrorKind kind) noexcept;

/// Runs one subcommand. args excludes the program name. Failures print a
/// single-line JSON object to err and return a non-zero status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cavspdc::cli
