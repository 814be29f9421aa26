#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dlab {

enum ExitCode : int { kExitOk = 0, kExitData = 1, kExitUsage = 2, kExitIo = 3 };

/// Runs the dialogue-lab command line. `args` excludes the program name.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace dlab
