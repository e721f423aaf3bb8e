#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace taumlmc {

inline constexpr const char* kToolVersion = "taumlmc 0.1.0";

/// Runs one command line (without the program name). Output goes to the
/// --out file when given, otherwise to `out`; diagnostics go to `err`.
/// Returns 0 on success or help, 1 on usage errors, 2 on runtime errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv);

}  // namespace taumlmc
