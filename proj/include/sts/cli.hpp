#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sts {

// Command-line driver. Exit codes: 0 success, 1 invariant violation,
// 2 configuration/parse error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sts
