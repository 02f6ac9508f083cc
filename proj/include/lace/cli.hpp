#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lace {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Subcommands: build-graph, stats, synth, train, predict, eval, ablate,
// gradcheck. `args` excludes the program name. Relative input paths that do
// not exist under the working directory are looked up under $LACE_DATA_DIR.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lace
