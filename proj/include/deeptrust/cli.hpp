#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deeptrust::cli {

inline constexpr const char* kOutDirEnv = "DEEPTRUST_OUT_DIR";

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on a validation error, 2 on an I/O error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace deeptrust::cli
