#pragma once

// Command-line front end. Every command writes one table (CSV with a "# {config}"
// header line, or JSON {"config", "rows"}) so any run can be reproduced from
// its own output.

#include "twodesign/architectures.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace twodesign {

enum ExitCode { exit_ok = 0, exit_config = 2, exit_unreached = 3, exit_oracle_mismatch = 4 };

/// Parses "a", "a:b" or "a:b:stride" into the inclusive list of integers.
std::vector<int> parse_range(const std::string& text);

/// Ensemble from a family name (graph families, "singles", "brickwork-obc",
/// "brickwork-pbc", "pcg", "pb", "pbfe") or a graph JSON file.
EnsembleSpec resolve_ensemble(const std::string& family, const std::string& graph_path, int n, LocalDim q,
                              const FamilyParams& params = {});

/// Runs one command; args exclude the program name. Returns an ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace twodesign
