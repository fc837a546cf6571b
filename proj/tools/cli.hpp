#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace camctx::cli {

// Runs one command line (without the program name). Exit codes: 0 ok,
// 1 usage error, 2 data or format error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace camctx::cli
