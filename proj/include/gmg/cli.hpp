#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gmg::cli {

// Runs one command line (without the program name). Returns the process exit
// status: 0 success, 2 usage, 3 format, 4 dimension/category mismatch,
// 5 missing artifact, 6 numerical failure, 1 anything unexpected. Failures
// print a single `error: <code>: <detail>` line to `err`.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace gmg::cli
