#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace cprl::cli {

// Bad flags or flag combinations; exits with status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses and runs one subcommand. Returns the process exit status: 0 on
// success, 2 for usage errors, 1 for data and I/O errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cprl::cli
