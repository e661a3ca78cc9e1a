#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fedmol {

/// Subcommands: generate, partition, run, grid, explain, project, report.
/// Returns 0 on success. Failures print one line "error: <code>: <message>"
/// to `err` (usage errors add the usage text) and return nonzero:
/// 2 usage, 3 invalid config, 4 dataset, 5 protocol, 6 I/O, 1 other.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace fedmol
