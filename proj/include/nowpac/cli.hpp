#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nowpac/bench.hpp"
#include "nowpac/core.hpp"

namespace nowpac {

enum class Subcommand { solve, bench, sweep };

struct CliInvocation {
  Subcommand subcommand = Subcommand::solve;
  std::vector<std::string> problems;  // solve and sweep take exactly one
  std::vector<std::pair<std::string, std::string>> overrides;
  SolverConfig config;                // defaults, then config file, then overrides
  std::string output_dir;             // empty: no history files
  TableFormat format = TableFormat::csv;
  std::vector<double> sc;             // bench stopping thresholds; empty: config.rho_min
  std::vector<double> noise_f;        // sweep takes several levels
  double noise_c = 0.0;
  int replicates = 1;
  int threads = 1;
  bool help = false;
  std::string help_text;
};

/// Parses `nowpac <subcommand> ...`. The output directory falls back to the
/// NOWPAC_OUT environment variable. Throws UsageError for malformed flags and
/// InvalidConfig for unknown keys or out-of-range values.
CliInvocation parse_args(int argc, const char* const* argv);

/// Runs the invocation, writing tables and summaries to `out` and diagnostics
/// to `err`. Returns 0 on success, 1 on solver errors.
int run_invocation(const CliInvocation& invocation, std::ostream& out, std::ostream& err);

/// parse_args followed by run_invocation; usage errors map to exit code 2.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Applies `key = value` lines ('#' starts a comment) to the configuration.
void apply_config_file(SolverConfig& config, const std::string& path);

}  // namespace nowpac
