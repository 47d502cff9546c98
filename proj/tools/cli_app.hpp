#pragma once

#include <string>
#include <vector>

namespace styletuner::cli {

// Runs one subcommand. Returns the process exit status: 0 on success,
// 2 on usage errors, 1 on typed runtime errors.
int dispatch(const std::vector<std::string>& args);

}  // namespace styletuner::cli
