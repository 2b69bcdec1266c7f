#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace simgroup::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one subcommand. args[0] is the program name. Progress goes to `out`,
// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Keeps the large per-sample training buffers on the heap rather than in
// fresh mmap pages. Process-wide; call once from main.
void tune_allocator();

}  // namespace simgroup::cli
