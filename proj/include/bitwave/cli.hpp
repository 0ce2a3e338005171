#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bitwave::cli {

/// Environment variable that sets the default output directory.
inline constexpr const char* kOutputEnv = "BITWAVE_OUTPUT_DIR";

/// Runs one invocation; `args` excludes the program name. Returns the exit code:
/// 0 ok, 1 I/O or parse, 2 config, 3 data, 4 numerical.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bitwave::cli
