#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vqmc/config.hpp"
#include "vqmc/core.hpp"

namespace vqmc {

/// Initial markers for a plain PIC run (tensor-product inverse transform or
/// uniform on the whole domain).
ParticleEnsemble initial_markers(const RunConfig& cfg);

struct RunOutput {
    std::vector<DiagnosticsRecord> records;
    std::vector<std::string> warnings;
};

/// Executes a validated configuration. When `out_dir` is non-empty the echoed
/// config, timeseries.csv and dumps are written there.
RunOutput execute_run(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Exit status: 0 success, 1 runtime error, 2 usage error. Errors are reported
/// on `err` as one JSON line {"error": kind, "message": ...}.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace vqmc
