#pragma once

#include "apm/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace apm {

/// Process exit codes, one per failure class.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,           // bad command line or unreadable/unwritable files
    kExitConfig = 2,          // malformed config (field path printed)
    kExitViolated = 3,        // validate: an assumption check reports "violated"
    kExitMaxIter = 4,         // solver stopped without meeting the FOC criterion
    kExitDiverging = 5,       // solver hit the divergence radius
    kExitRejected = 6,        // linear/ungrowth-controlled utility or a rule without finite limit
    kExitDensityFailed = 7,   // risk-neutral verification failed
    kExitOverflow = 8,        // too many non-finite utility values at the start point
    kExitStageBase = 20,      // recursive builder: 20 + failing stage index
};

struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<unsigned> threads;
};

[[nodiscard]] const std::vector<std::string>& command_names();

/// Runs one subcommand on a parsed config; report files go to opts.out_dir.
[[nodiscard]] int run_parsed(const std::string& command, ExperimentConfig cfg, const RunOptions& opts,
                             std::ostream& out);

/// Loads the config, runs the command and maps every failure to an exit code.
[[nodiscard]] int run_command(const std::string& command, const std::filesystem::path& config,
                              const RunOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace apm
