#pragma once

#include <string>
#include <vector>

namespace mfp {

// Command-line driver; returns the process exit code (see ExitCode).
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace mfp
