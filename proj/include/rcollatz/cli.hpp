#pragma once

// Command-line front end. run() is the whole program minus argv handling, so
// tests can drive it with in-memory streams.

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rcollatz/errors.hpp"

namespace rcollatz::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitUsage = 2,
    kExitNonConvergence = 3,
    kExitVerification = 4,
};

class UsageError : public Error {
public:
    using Error::Error;
};

/// `args` excludes the program name: {"simulate", "--x0", "1", ...}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Non-negative integer written plainly or in scientific notation ("1e6").
std::uint64_t parse_count(const std::string& text);
/// "a..b" with a <= b.
std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& text);

const char* version();

}  // namespace rcollatz::cli
