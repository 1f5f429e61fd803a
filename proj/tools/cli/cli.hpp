#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace corgs::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitData = 3,
    kExitNumerical = 4,
};

/// Entry point shared by the `corgs` binary and the tests.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace corgs::cli
