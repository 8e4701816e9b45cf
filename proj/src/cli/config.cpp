#include "cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "strictlyap/errors.hpp"

namespace strictlyap::cli {

namespace {

using nlohmann::json;

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

double get_finite(const json& j, const char* key, const std::string& where) {
    const double v = get<double>(j, key, where);
    if (!std::isfinite(v)) throw ConfigError(where + "." + key + " must be finite");
    return v;
}

std::vector<std::vector<double>> matrix_from_json(const json& j, const std::string& where) {
    std::vector<std::vector<double>> m;
    try {
        m = j.get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
    if (m.empty()) throw ConfigError(where + ": empty matrix");
    for (const auto& row : m) {
        if (row.size() != m.size()) throw ConfigError(where + ": matrix must be square");
    }
    return m;
}

std::function<bool(const State&)> set_predicate(const std::string& name, const std::string& where) {
    if (name == "all") return [](const State&) { return true; };
    if (name == "none") return [](const State&) { return false; };
    if (name == "nonneg") return [](const State& x) { return x[0] >= 0.0; };
    if (name == "nonpos") return [](const State& x) { return x[0] <= 0.0; };
    throw ConfigError(where + ": unknown set '" + name + "'");
}

Eigen::MatrixXd to_eigen(const std::vector<std::vector<double>>& m) {
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = m[i][j];
    }
    return A;
}

}  // namespace

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

State state_from_json(const json& j) {
    std::vector<double> v;
    try {
        v = j.get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("initial state: ") + e.what());
    }
    if (v.empty()) throw ConfigError("initial state: empty vector");
    State x(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) throw ConfigError("initial state: non-finite entry");
        x[static_cast<Eigen::Index>(i)] = v[i];
    }
    return x;
}

// ---------------------------------------------------------------------------

Policy PolicySpec::to_policy() const {
    if (kind == "jump-priority") return JumpPriority{};
    if (kind == "flow-priority") return FlowPriority{flow_time};
    if (kind == "schedule") {
        std::vector<double> times = jump_times;
        for (long i = 1; i <= count; ++i) times.push_back(period * static_cast<double>(i));
        std::sort(times.begin(), times.end());
        return Schedule{times};
    }
    throw ConfigError("policy: unknown kind '" + kind + "'");
}

PolicySpec PolicySpec::from_json(const json& j) {
    const std::string where = "simulation.policy";
    reject_unknown_keys(j, {"kind", "flow_time", "jump_times", "period", "count"}, where);
    PolicySpec p;
    p.kind = get<std::string>(j, "kind", where);
    if (p.kind != "jump-priority" && p.kind != "flow-priority" && p.kind != "schedule") {
        throw ConfigError(where + ": unknown kind '" + p.kind + "'");
    }
    if (j.contains("flow_time")) p.flow_time = get_finite(j, "flow_time", where);
    if (p.kind == "flow-priority" && !(p.flow_time > 0.0)) throw ConfigError(where + ".flow_time must be > 0");
    if (j.contains("jump_times")) p.jump_times = get<std::vector<double>>(j, "jump_times", where);
    if (j.contains("period")) p.period = get_finite(j, "period", where);
    if (j.contains("count")) p.count = get<long>(j, "count", where);
    if (p.count < 0) throw ConfigError(where + ".count must be >= 0");
    if (p.count > 0 && !(p.period > 0.0)) throw ConfigError(where + ".period must be > 0");
    return p;
}

json PolicySpec::to_json() const {
    json j{{"kind", kind}};
    if (kind == "flow-priority") j["flow_time"] = flow_time;
    if (kind == "schedule") {
        j["jump_times"] = jump_times;
        j["period"] = period;
        j["count"] = count;
    }
    return j;
}

SimulationSpec SimulationSpec::from_json(const json& j, const SimulationSpec& defaults) {
    const std::string where = "simulation";
    reject_unknown_keys(j, {"policy", "initial_states", "random_initial", "initial_radius", "t0", "budget"}, where);
    SimulationSpec s = defaults;
    if (j.contains("policy")) s.policy = PolicySpec::from_json(j.at("policy"));
    if (j.contains("initial_states")) {
        s.initial_states.clear();
        for (const auto& x : j.at("initial_states")) s.initial_states.push_back(state_from_json(x));
    }
    if (j.contains("random_initial")) s.random_initial = get<std::size_t>(j, "random_initial", where);
    if (j.contains("initial_radius")) s.initial_radius = get_finite(j, "initial_radius", where);
    if (j.contains("t0")) s.t0 = get_finite(j, "t0", where);
    if (j.contains("budget")) {
        const auto& b = j.at("budget");
        reject_unknown_keys(b, {"flow_time", "jumps", "consecutive_jumps", "step"}, where + ".budget");
        if (b.contains("flow_time")) s.budget.flow_time = get_finite(b, "flow_time", where + ".budget");
        if (b.contains("jumps")) s.budget.jumps = get<long>(b, "jumps", where + ".budget");
        if (b.contains("consecutive_jumps")) {
            s.budget.consecutive_jumps = get<long>(b, "consecutive_jumps", where + ".budget");
        }
        if (b.contains("step")) s.budget.step = get_finite(b, "step", where + ".budget");
    }
    if (!(s.budget.step > 0.0)) throw ConfigError("simulation.budget.step must be > 0");
    if (s.budget.flow_time < 0.0 || s.budget.jumps < 0 || s.budget.consecutive_jumps < 1) {
        throw ConfigError("simulation.budget: negative limits");
    }
    if (!(s.initial_radius > 0.0)) throw ConfigError("simulation.initial_radius must be > 0");
    return s;
}

json SimulationSpec::to_json() const {
    json states = json::array();
    for (const auto& x : initial_states) states.push_back(std::vector<double>(x.data(), x.data() + x.size()));
    return {{"policy", policy.to_json()},
            {"initial_states", states},
            {"random_initial", random_initial},
            {"initial_radius", initial_radius},
            {"t0", t0},
            {"budget",
             {{"flow_time", budget.flow_time},
              {"jumps", budget.jumps},
              {"consecutive_jumps", budget.consecutive_jumps},
              {"step", budget.step}}}};
}

// ---------------------------------------------------------------------------

HybridSystem SystemSpec::build() const {
    HybridSystem h;
    h.in_C = set_predicate(flow_set, "system.flow_set");
    h.in_D = set_predicate(jump_set, "system.jump_set");
    const Eigen::MatrixXd Ac = to_eigen(flow_matrix);
    const Eigen::MatrixXd Ad = to_eigen(jump_matrix);
    const double nc = Ac.operatorNorm();
    const double nd = Ad.operatorNorm();
    h.flow.G = [Ac](const State& x, double) -> State { return Ac * x; };
    h.flow.mu_G = [nc](double s) { return nc * s; };
    h.flow.dim = static_cast<int>(Ac.rows());
    h.jump.F = [Ad](const State& x, long) -> State { return Ad * x; };
    h.jump.mu_F = [nd](double s) { return nd * s; };
    h.jump.dim = static_cast<int>(Ad.rows());
    return h;
}

SystemSpec SystemSpec::from_json(const json& j) {
    const std::string where = "system";
    reject_unknown_keys(j, {"flow_matrix", "jump_matrix", "flow_set", "jump_set"}, where);
    SystemSpec s;
    s.flow_matrix = matrix_from_json(j.at("flow_matrix"), where + ".flow_matrix");
    s.jump_matrix = matrix_from_json(j.at("jump_matrix"), where + ".jump_matrix");
    if (s.flow_matrix.size() != s.jump_matrix.size()) throw ConfigError("system: flow and jump dimensions differ");
    if (j.contains("flow_set")) s.flow_set = get<std::string>(j, "flow_set", where);
    if (j.contains("jump_set")) s.jump_set = get<std::string>(j, "jump_set", where);
    set_predicate(s.flow_set, "system.flow_set");
    set_predicate(s.jump_set, "system.jump_set");
    return s;
}

json SystemSpec::to_json() const {
    return {{"flow_matrix", flow_matrix}, {"jump_matrix", jump_matrix}, {"flow_set", flow_set}, {"jump_set", jump_set}};
}

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    const std::string where = "config";
    reject_unknown_keys(j,
                        {"schema_version", "example", "system", "params", "pe_discrete", "pe_continuous", "grid",
                         "mode", "tolerance", "simulation", "sabotage", "seed"},
                        where);
    ExperimentConfig c;
    if (!j.contains("schema_version")) throw ConfigError("config: missing schema_version");
    c.schema_version = get<int>(j, "schema_version", where);
    if (c.schema_version != kSchemaVersion) {
        throw ConfigError("config: unsupported schema_version " + std::to_string(c.schema_version));
    }
    if (j.contains("example")) c.example = get<std::string>(j, "example", where);
    if (j.contains("system")) c.system = SystemSpec::from_json(j.at("system"));
    if (!c.example && !c.system) throw ConfigError("config: needs 'example' or 'system'");
    if (c.example && c.system) throw ConfigError("config: 'example' and 'system' are exclusive");
    if (j.contains("params")) {
        c.params = j.at("params");
        if (!c.params.is_object()) throw ConfigError("config.params must be an object");
    }
    if (j.contains("pe_discrete")) {
        const auto& p = j.at("pe_discrete");
        reject_unknown_keys(p, {"type", "l", "delta", "samples", "start_index", "periodic"}, "config.pe_discrete");
        const double delta = get<double>(p, "delta", "config.pe_discrete");
        if (!(delta > 0.0)) throw ConfigError("config.pe_discrete.delta must be > 0");
        if (get<int>(p, "l", "config.pe_discrete") < 0) throw ConfigError("config.pe_discrete.l must be >= 0");
        c.pe_discrete = p;
    }
    if (j.contains("pe_continuous")) {
        const auto& q = j.at("pe_continuous");
        reject_unknown_keys(q, {"type", "kind", "tau", "eps", "times", "values", "periodic"}, "config.pe_continuous");
        if (!(get<double>(q, "tau", "config.pe_continuous") > 0.0)) {
            throw ConfigError("config.pe_continuous.tau must be > 0");
        }
        if (!(get<double>(q, "eps", "config.pe_continuous") > 0.0)) {
            throw ConfigError("config.pe_continuous.eps must be > 0");
        }
        c.pe_continuous = q;
    }
    if (j.contains("grid")) {
        GridSpec::from_json(j.at("grid")).validate();
        c.grid = j.at("grid");
    }
    if (j.contains("mode")) c.mode = get<std::string>(j, "mode", where);
    if (j.contains("tolerance")) {
        c.tolerance = get_finite(j, "tolerance", where);
        if (!(*c.tolerance >= 0.0)) throw ConfigError("config.tolerance must be >= 0");
    }
    if (j.contains("simulation")) {
        SimulationSpec::from_json(j.at("simulation"), {});
        c.simulation = j.at("simulation");
    }
    if (j.contains("sabotage")) {
        const auto& s = j.at("sabotage");
        reject_unknown_keys(s, {"decay_bound_scale"}, "config.sabotage");
        if (s.contains("decay_bound_scale")) c.decay_bound_scale = get_finite(s, "decay_bound_scale", "config.sabotage");
    }
    if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", where);
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    json j{{"schema_version", schema_version}, {"params", params}, {"seed", seed}};
    if (example) j["example"] = *example;
    if (system) j["system"] = system->to_json();
    if (pe_discrete) j["pe_discrete"] = *pe_discrete;
    if (pe_continuous) j["pe_continuous"] = *pe_continuous;
    if (grid) j["grid"] = *grid;
    if (mode) j["mode"] = *mode;
    if (tolerance) j["tolerance"] = *tolerance;
    if (simulation) j["simulation"] = *simulation;
    if (decay_bound_scale != 1.0) j["sabotage"] = {{"decay_bound_scale", decay_bound_scale}};
    return j;
}

}  // namespace strictlyap::cli
