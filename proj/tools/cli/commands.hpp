#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace perc::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 hard check failure (verify), 2 usage or
// configuration error, 3 runtime error.
int run(int argc, const char* const* argv, std::ostream& log);
int run(const std::vector<std::string>& args, std::ostream& log);

}  // namespace perc::cli
