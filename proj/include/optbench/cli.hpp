#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace optbench {

// Everything a subcommand can receive from the command line; the parser in
// the executable fills this in, tests construct it directly.
struct CliOptions {
  std::string input;
  std::string output;
  std::string config_path;
  std::string mode = "leakage-safe";  // preprocess: or "paper-faithful"
  std::optional<std::uint64_t> seed;    // preprocess: overrides the split seed
  std::vector<std::string> optimizers;  // benchmark filter / enhanced subject
  std::optional<std::size_t> epochs;
  bool plots = false;
  std::size_t jobs = 0;         // 0 = one worker per processor
  std::string format = "csv";   // report re-render target: kv, csv or md
};

// Exit codes: 0 success, 1 runtime failure or diverged runs, 2 missing
// input file or configuration error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRunError = 1;
inline constexpr int kExitUsage = 2;

int cmd_preprocess(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_benchmark(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_enhanced(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_report(const CliOptions& options, std::ostream& out, std::ostream& err);

}  // namespace optbench
