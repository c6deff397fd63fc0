#pragma once

// Command-line front end: convert / evaluate / sweep / info / replay.
//
// Every run that writes files also writes a RunManifest (JSON) next to its
// outputs: the subcommand, every resolved parameter, the seed, CRC-32 and
// size of each input file, and the output paths. `snn_sim replay
// <manifest>` re-runs it with the same parameters.

#include <iosfwd>
#include <string>
#include <vector>

namespace snn_sim::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitTargetUnreached = 3,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace snn_sim::cli
