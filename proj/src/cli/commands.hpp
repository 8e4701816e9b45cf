#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "cli/config.hpp"

namespace strictlyap::cli {

enum ExitCode : int {
    kExitPass = 0,
    kExitConstruction = 2,
    kExitCertification = 3,
    kExitZeno = 4,
    kExitConfig = 64,
};

struct CommandOptions {
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance;
};

/// Applies --seed and --tol on top of the config.
ExperimentConfig apply_overrides(ExperimentConfig cfg, const CommandOptions& opts);

int cmd_strictify(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_certify(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& out);
int cmd_examples_list(std::ostream& out);
int cmd_examples_run(const std::string& id, const CommandOptions& opts, std::ostream& out);

/// Runs `fn`, mapping library errors to exit codes and printing them to `err`.
int run_guarded(const std::function<int()>& fn, std::ostream& err);

}  // namespace strictlyap::cli
