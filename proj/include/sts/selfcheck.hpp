#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "sts/system.hpp"

namespace sts {

// Full invariant battery for one system: exterior algebra identities,
// operator identities, spectral diagnostics (dense, D <= 2), simulator
// reproducibility (D = 1) and the Morse complex cross-check (gradient
// flows). Each check emits one line; `failed == 0` is the pass signal.
struct SelfCheckResult {
    int passed = 0;
    int failed = 0;
    int skipped = 0;
    std::vector<std::string> lines;
};

SelfCheckResult run_selfcheck(const SystemSpec& system, std::ostream* log = nullptr);

}  // namespace sts
