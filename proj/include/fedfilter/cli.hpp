#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fedfilter {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitRuntimeError = 2,
};

// Entry point of the `fedfilter` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fedfilter
