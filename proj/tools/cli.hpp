#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace imphopf::cli {

inline constexpr int kFormatVersion = 1;

enum ExitCode { kOk = 0, kUsage = 2, kNumerical = 3 };

/// Runs one command line (without the program name). Results go to `out`
/// unless --out names a file; error records go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace imphopf::cli
