#pragma once

#include <string>
#include <vector>

namespace clothfit {

// Full command-line tool: gen-target, estimate, evaluate, gradcheck,
// gen-dataset. `args` excludes the program name. Returns the process exit
// code: 0 success, 1 validation error, 2 simulation divergence, 3 I/O error.
int run_cli(const std::vector<std::string>& args);

}  // namespace clothfit
