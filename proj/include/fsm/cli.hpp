#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fsm::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 every check passed, 1 a check failed, 2 bad usage or input.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace fsm::cli
