#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace onexn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Entry point for the `onexn` tool; `args` excludes the program name.
/// Returns 0 on success, 2 on usage errors, 3 on data errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace onexn::cli
