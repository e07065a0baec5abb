#pragma once

#include <string>
#include <vector>

namespace fusiongen::cli {

/// Runs one CLI invocation. args excludes the program name.
/// Returns 0 on success, 1 on runtime failure, 2 on bad flags.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, const char* const* argv);

}  // namespace fusiongen::cli
