#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dft {

/// Runs one `dft` subcommand. `args` excludes the program name. Failures
/// print "error: <code>: <message>" on `err`; the result is 0 on success,
/// 1 for module errors and 2 for usage errors.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dft
