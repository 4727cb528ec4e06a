#ifndef DPCD_CLI_H_
#define DPCD_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace dpcd {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitSolver = 3,
};

// Entry point of the dpcd tool. args[0] is the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace dpcd

#endif  // DPCD_CLI_H_
