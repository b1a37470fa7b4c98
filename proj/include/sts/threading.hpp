#pragma once

#include <cstdlib>
#include <thread>

namespace sts {

// Thread budget for parallel loops. STS_THREADS overrides hardware
// concurrency; results are schedule-independent by construction everywhere
// this is used (independent work items, integer or per-column merges).
inline int thread_budget() {
    if (const char* env = std::getenv("STS_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace sts
