#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "keyminer/keys.hpp"
#include "keyminer/table.hpp"

namespace keyminer {

// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Runs `keyminer <mode> [flags]`. Results go to `out`, diagnostics and the
// interactive prompt go to `err`, answers are read from `in`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            std::istream& in);

// Parses a constraint written on the command line:
//   "Cylinders<5", "Hp>=90", "70<=Model<76", "origin==3", "origin==1|2"
// or a JSON range object. Throws Error when it cannot be read.
Range parse_delta(std::string_view text, const Table& table);

}  // namespace keyminer
