#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stochwave {

/// Runs one CLI invocation (args exclude the program name). Returns the exit
/// code: 0 success, 1 computation or I/O failure, 2 usage error.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stochwave
