#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "refinekit/error.hpp"

namespace refinekit {

// Process exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNonFinite = 3;

int exit_code_for(ErrorCode code);

// Entry point of `refine-kit`. `args` excludes the program name. Reports go
// to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace refinekit
