#pragma once
#include <string>
#include <vector>

#include "wcgl/config.hpp"

namespace wcgl {

struct RunResult {
    int exit_code = 0; // 0 ok, 2 config error, 3 numerical failure, 4 I/O failure
    std::string message;
    std::string out_dir;
    std::vector<std::string> outputs; // file names written into out_dir
};

// Executes cfg.command. Outputs are assembled in a staging directory inside
// the output directory and renamed into place only after the manifest is
// written, so a crashed or failed run never leaves unreferenced files. On a
// module failure the partial outputs are still delivered, marked
// complete=false in the manifest. Data files are a pure function of
// (config, seed, code version); the manifest additionally carries wall time.
RunResult run(const RunConfig& cfg);

} // namespace wcgl
