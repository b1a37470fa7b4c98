#pragma once

#include <stdexcept>
#include <string>

namespace sts {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError        -> exit 2 (bad flags, files, expressions, preconditions)
//   NumericsError      -> exit 3 (solver breakdown, non-convergence)
//   InvariantViolation -> exit 1 (a structural identity the library promises
//                                 failed on actual data; worth a bug hunt)
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

struct InvariantViolation : std::runtime_error {
    explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sts
