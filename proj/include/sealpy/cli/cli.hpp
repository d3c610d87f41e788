#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sealpy::cli {

// Exit codes shared by every subcommand.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int guest_error = 1; // also: check parse failure
inline constexpr int policy = 2;      // policy violation or memory budget exceeded
inline constexpr int findings = 3;
inline constexpr int gate_failed = 5;
inline constexpr int usage = 64;
} // namespace exit_code

// Runs one invocation; args[0] is the program name. Never reads the
// process environment.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace sealpy::cli
