#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "strictlyap/matrosov.hpp"
#include "strictlyap/strictify.hpp"

namespace strictlyap::cli {

enum class InstanceKind { DiscretePE, ContinuousPE, HybridPE, Matrosov, SystemOnly };

std::string to_string(InstanceKind k);

/// Everything a command needs, resolved from a config.
struct Instance {
    std::string id;
    InstanceKind kind = InstanceKind::SystemOnly;

    PEStrictificationConfig pe;  // DiscretePE, ContinuousPE
    std::optional<DiscreteSystem> F;
    std::optional<ContinuousSystem> G;

    HybridStrictificationConfig hybrid;  // HybridPE

    MatrosovData matrosov;  // Matrosov
    MatrosovMode mode = MatrosovMode::Discrete;

    HybridSystem system;  // used by simulate
    GridSpec grid;
    double tolerance = 1e-6;
    SimulationSpec simulation;
    double decay_bound_scale = 1.0;
    std::uint64_t seed = 0;

    /// Initial states: the listed ones followed by seeded random draws.
    std::vector<State> initial_states() const;
};

struct Example {
    std::string id;
    std::string summary;
    InstanceKind kind;
    nlohmann::json default_params;
    std::function<Instance(const ExperimentConfig&, const nlohmann::json& params)> build;
};

const std::vector<Example>& registry();
const Example& find_example(const std::string& id);

/// Resolves an example id or a composite system description. Throws ConfigError.
Instance resolve(const ExperimentConfig& cfg);

/// Default config for an example, as `examples run` uses it.
ExperimentConfig default_config(const std::string& id);

/// Symmetric P solving A' P A - P = -I (A Schur stable).
Eigen::MatrixXd discrete_lyapunov(const Eigen::MatrixXd& A);

}  // namespace strictlyap::cli
