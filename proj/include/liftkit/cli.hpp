#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace liftkit::cli {

inline constexpr const char* kToolVersion = "liftkit 0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitPartial = 3,
};

/// Entry point shared by the executable and the integration tests.
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace liftkit::cli
