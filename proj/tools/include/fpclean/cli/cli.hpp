#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fpclean/error.hpp"

namespace fpclean::cli {

// Process exit codes. 75 is EX_TEMPFAIL: the run stopped on purpose and can
// be resumed from its checkpoint.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitEndpoint = 3;
inline constexpr int kExitSafety = 4;
inline constexpr int kExitInterrupted = 75;

int exit_code_for(ErrorCode code) noexcept;

/// Runs one command line (args[0] is the program name). Results go to `out`,
/// failures to `err` as a single JSON object line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fpclean::cli
