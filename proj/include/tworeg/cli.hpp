#pragma once

#include <string>
#include <vector>

namespace tworeg {

/// Runs the command-line front end. Exit codes: 0 success, 2 validation
/// error, 3 data error, 4 numerical failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace tworeg
