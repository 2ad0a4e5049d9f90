#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mcsff::cli {

enum ExitCode : int { kOk = 0, kInvalid = 1, kIoOrConfig = 2, kNonFinite = 3 };

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcsff::cli
