#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace urllc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the urllc_lab tool; args exclude the program name. Subcommands: train, probe, report,
// baseline. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

// Runs task(i) for i in [0, n) on up to `workers` threads. The first
// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task);

}  // namespace urllc
