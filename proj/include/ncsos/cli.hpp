#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ncsos::cli {

/// Runs one CLI invocation (args exclude the program name). Reports go to
/// out as JSON; diagnostics to err. Exit codes: 0 certificate/positive
/// answer, 1 witness/negative answer, 2 indeterminate, 64 usage or input
/// errors.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace ncsos::cli
