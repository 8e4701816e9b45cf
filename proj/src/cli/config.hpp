#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strictlyap/certify.hpp"
#include "strictlyap/systems.hpp"

namespace strictlyap::cli {

inline constexpr int kSchemaVersion = 1;

struct PolicySpec {
    std::string kind = "jump-priority";  // jump-priority | flow-priority | schedule
    double flow_time = 1.0;              // flow-priority
    std::vector<double> jump_times;      // schedule, explicit
    double period = 0.0;                 // schedule, generated: period * i for i = 1..count
    long count = 0;

    Policy to_policy() const;
    static PolicySpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct SimulationSpec {
    PolicySpec policy;
    std::vector<State> initial_states;
    std::size_t random_initial = 0;  // extra initial states, uniform in [-radius, radius]^n
    double initial_radius = 2.0;
    double t0 = 0.0;
    Budget budget;

    static SimulationSpec from_json(const nlohmann::json& j, const SimulationSpec& defaults);
    nlohmann::json to_json() const;
};

/// Linear hybrid system x' = A_c x on C, x+ = A_d x on D. Sets: all | none | nonneg | nonpos (first coordinate).
struct SystemSpec {
    std::vector<std::vector<double>> flow_matrix;
    std::vector<std::vector<double>> jump_matrix;
    std::string flow_set = "all";
    std::string jump_set = "none";

    HybridSystem build() const;
    static SystemSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::optional<std::string> example;
    std::optional<SystemSpec> system;
    nlohmann::json params = nlohmann::json::object();
    std::optional<nlohmann::json> pe_discrete;
    std::optional<nlohmann::json> pe_continuous;
    std::optional<nlohmann::json> grid;
    std::optional<std::string> mode;
    std::optional<double> tolerance;
    std::optional<nlohmann::json> simulation;
    double decay_bound_scale = 1.0;  // sabotage knob: scales the certified bound
    std::uint64_t seed = 0;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;
};

/// Throws ConfigError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where);

State state_from_json(const nlohmann::json& j);

}  // namespace strictlyap::cli
